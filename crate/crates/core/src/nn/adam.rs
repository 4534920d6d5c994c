use serde::{Deserialize, Serialize};

use super::{EncoderModel, NnError, Precision, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    /// Toy-scale learning rate; see [`AdamConfig::full_scale`].
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn full_scale() -> Self {
        AdamConfig { lr: 3e-5, ..Default::default() }
    }
}

/// Step counter and per-parameter moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub hyper: AdamConfig,
    pub m: Weights,
    pub v: Weights,
}

impl AdamState {
    pub fn new(model: &EncoderModel, hyper: AdamConfig) -> AdamState {
        AdamState { t: 0, hyper, m: Weights::zeros(&model.config), v: Weights::zeros(&model.config) }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(model: &mut EncoderModel, grads: &Weights, state: &mut AdamState) -> Result<(), NnError> {
    model.weights.check_shape(grads)?;
    model.weights.check_shape(&state.m)?;
    state.t += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.hyper;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);
    let params = model.weights.tensors_mut();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    for (((p, g), m), v) in params.into_iter().zip(grads.tensors()).zip(ms).zip(vs) {
        for i in 0..p.data.len() {
            let gi = g.data[i];
            m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * gi;
            v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * gi * gi;
            let mhat = m.data[i] / bc1;
            let vhat = v.data[i] / bc2;
            p.data[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
    if model.config.precision == Precision::Single {
        model.weights.round_to_f32();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::EncoderConfig;

    fn model() -> EncoderModel {
        let cfg = EncoderConfig { vocab_size: 12, max_len: 6, hidden_dim: 4, num_heads: 2, ff_dim: 4, num_layers: 1, precision: Precision::Double, ..Default::default() };
        EncoderModel::new(cfg, 0).unwrap()
    }

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        let mut m = model();
        let before = m.clone();
        let mut g = Weights::zeros(&m.config);
        g.cls_b.data = vec![0.5, -2.0, 0.05];
        let mut st = AdamState::new(&m, AdamConfig::default());
        adam_step(&mut m, &g, &mut st).unwrap();
        let lr = st.hyper.lr;
        for c in 0..3 {
            let delta = m.weights.cls_b.data[c] - before.weights.cls_b.data[c];
            let expect = -lr * g.cls_b.data[c].signum();
            assert!((delta - expect).abs() <= lr * 1e-6, "{delta} vs {expect}");
        }
        assert_eq!(m.weights.cls_w, before.weights.cls_w);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut m = model();
        let before = m.clone();
        let mut st = AdamState::new(&m, AdamConfig::default());
        let g = Weights::zeros(&m.config);
        adam_step(&mut m, &g, &mut st).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut m = model();
        let other = EncoderConfig { vocab_size: 13, ..m.config.clone() };
        let mut st = AdamState::new(&m, AdamConfig::default());
        assert!(matches!(adam_step(&mut m, &Weights::zeros(&other), &mut st), Err(NnError::ShapeMismatch(_))));
    }
}
