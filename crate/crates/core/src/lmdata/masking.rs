use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LmDataError;
use crate::text::Vocab;

/// Token-selection rate and the replace/randomize/keep split applied to
/// selected tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskingPolicy {
    pub select_rate: f64,
    pub mask_frac: f64,
    pub random_frac: f64,
    pub keep_frac: f64,
}

impl Default for MaskingPolicy {
    fn default() -> Self {
        MaskingPolicy { select_rate: 0.15, mask_frac: 0.8, random_frac: 0.1, keep_frac: 0.1 }
    }
}

impl MaskingPolicy {
    pub fn validate(&self) -> Result<(), LmDataError> {
        let fracs = [self.mask_frac, self.random_frac, self.keep_frac];
        if !(self.select_rate >= 0.0 && self.select_rate <= 1.0) {
            return Err(LmDataError::InvalidPolicy(format!("select_rate {} outside [0, 1]", self.select_rate)));
        }
        if fracs.iter().any(|f| f.is_nan() || *f < 0.0) || (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(LmDataError::InvalidPolicy(format!("action fractions {fracs:?} must be >= 0 and sum to 1")));
        }
        Ok(())
    }

    pub fn to_header(&self) -> String {
        format!("{}/{}/{}/{}", self.select_rate, self.mask_frac, self.random_frac, self.keep_frac)
    }

    pub fn from_header(s: &str) -> Option<MaskingPolicy> {
        let v: Vec<f64> = s.split('/').map(|x| x.parse().ok()).collect::<Option<_>>()?;
        match v[..] {
            [select_rate, mask_frac, random_frac, keep_frac] => {
                Some(MaskingPolicy { select_rate, mask_frac, random_frac, keep_frac })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskAction {
    Mask,
    Random,
    Keep,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskOutcome {
    pub input_ids: Vec<u32>,
    pub positions: Vec<u32>,
    pub labels: Vec<u32>,
    pub actions: Vec<MaskAction>,
}

/// Select each non-special token with probability `select_rate`, then replace
/// it by `[MASK]`, replace it by a uniform non-special id, or keep it.
/// Selected positions come back in increasing order with their original ids.
pub fn apply_mlm_mask<R: Rng>(ids: &[u32], policy: &MaskingPolicy, vocab_size: usize, rng: &mut R) -> MaskOutcome {
    let specials = Vocab::specials();
    let mut out = MaskOutcome { input_ids: ids.to_vec(), positions: vec![], labels: vec![], actions: vec![] };
    let first_word = Vocab::NUM_SPECIAL as u32;
    for (i, &id) in ids.iter().enumerate() {
        if id == specials.cls || id == specials.sep || id == specials.pad {
            continue;
        }
        if !rng.gen_bool(policy.select_rate) {
            continue;
        }
        let u: f64 = rng.gen();
        let action = if u < policy.mask_frac {
            MaskAction::Mask
        } else if u < policy.mask_frac + policy.random_frac {
            MaskAction::Random
        } else {
            MaskAction::Keep
        };
        match action {
            MaskAction::Mask => out.input_ids[i] = specials.mask,
            MaskAction::Random if vocab_size > first_word as usize => {
                out.input_ids[i] = rng.gen_range(first_word..vocab_size as u32)
            }
            _ => {}
        }
        out.positions.push(i as u32);
        out.labels.push(id);
        out.actions.push(action);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn zero_rate_is_identity() {
        let ids = [2, 10, 11, 12, 3, 13, 3];
        let p = MaskingPolicy { select_rate: 0.0, ..Default::default() };
        let out = apply_mlm_mask(&ids, &p, 20, &mut seed::rng(0));
        assert_eq!(out.input_ids, ids);
        assert!(out.positions.is_empty());
    }

    #[test]
    fn touchscreen_example() {
        let v = Vocab::from_words(["the", "touchscreen", "is", "an", "input", "device"]);
        let s = Vocab::specials();
        let mut ids = vec![s.cls];
        ids.extend(v.encode(&["the", "touchscreen", "is", "an", "input", "device"].map(String::from)));
        ids.push(s.sep);
        let p = MaskingPolicy { select_rate: 1.0, mask_frac: 1.0, random_frac: 0.0, keep_frac: 0.0 };
        let out = apply_mlm_mask(&ids, &p, v.len(), &mut seed::rng(3));
        let pos = out.positions.iter().position(|&p| p == 5).unwrap();
        assert_eq!(out.input_ids[5], s.mask);
        assert_eq!(out.labels[pos], v.id("input"));
    }

    #[test]
    fn specials_never_selected() {
        let ids = [2, 7, 3, 8, 3, 0, 0];
        let p = MaskingPolicy { select_rate: 1.0, ..Default::default() };
        let out = apply_mlm_mask(&ids, &p, 10, &mut seed::rng(1));
        assert_eq!(out.positions, [1, 3]);
    }

    #[test]
    fn policy_validation() {
        assert!(MaskingPolicy::default().validate().is_ok());
        assert!(MaskingPolicy { keep_frac: 0.2, ..Default::default() }.validate().is_err());
        assert!(MaskingPolicy { select_rate: 1.5, ..Default::default() }.validate().is_err());
        let d = MaskingPolicy::default();
        assert_eq!(MaskingPolicy::from_header(&d.to_header()), Some(d));
    }
}
