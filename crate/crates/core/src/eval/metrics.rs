use super::EvalError;
use crate::text::Polarity;

/// 3×3 confusion counts, `m[gold][pred]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub m: [[u64; 3]; 3],
}

impl Confusion {
    pub fn from_labels(predictions: &[Polarity], golds: &[Polarity]) -> Result<Confusion, EvalError> {
        if predictions.len() != golds.len() {
            return Err(EvalError::LengthMismatch(predictions.len(), golds.len()));
        }
        if golds.is_empty() {
            return Err(EvalError::EmptyInput);
        }
        let mut c = Confusion::default();
        for (p, g) in predictions.iter().zip(golds) {
            c.m[g.index()][p.index()] += 1;
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.m.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..3).map(|i| self.m[i][i]).sum()
    }

    /// F1 of class `k`; 0 when the class is absent from both sides.
    pub fn f1(&self, k: usize) -> f64 {
        let tp = self.m[k][k];
        let fp: u64 = (0..3).map(|g| self.m[g][k]).sum::<u64>() - tp;
        let fn_: u64 = self.m[k].iter().sum::<u64>() - tp;
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * tp) as f64 / denom as f64
        }
    }
}

pub fn accuracy(predictions: &[Polarity], golds: &[Polarity]) -> Result<f64, EvalError> {
    let c = Confusion::from_labels(predictions, golds)?;
    Ok(c.correct() as f64 / c.total() as f64)
}

/// Unweighted mean of the three per-class F1 scores.
pub fn macro_f1(predictions: &[Polarity], golds: &[Polarity]) -> Result<f64, EvalError> {
    let c = Confusion::from_labels(predictions, golds)?;
    Ok((c.f1(0) + c.f1(1) + c.f1(2)) / 3.0)
}

pub fn mean(values: &[f64]) -> Result<f64, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Mean and sample (n − 1) standard deviation.
pub fn aggregate_runs(values: &[f64]) -> Result<(f64, f64), EvalError> {
    if values.len() < 2 {
        return Err(EvalError::InsufficientRuns(values.len()));
    }
    let mu = mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - mu) * (v - mu)).sum();
    Ok((mu, (ss / (values.len() - 1) as f64).sqrt()))
}
