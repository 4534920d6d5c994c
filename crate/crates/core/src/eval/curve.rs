use super::metrics::{aggregate_runs, mean};
use super::EvalError;
use crate::exec::Exec;
use crate::text::{AtscDataset, Vocab};
use crate::training::{evaluate_accuracy, train_atsc, AtscRunSpec, Snapshot};

/// Accuracy improvement over the 0-sentence snapshot, paired per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub sentences_seen: u64,
    pub accuracy_mean: f64,
    pub delta_mean: f64,
    pub delta_std: Option<f64>,
}

/// `points[k] = (sentences_seen, [(seed, accuracy)])`. Every point must cover
/// the baseline's seeds.
pub fn curve_from_accuracies(points: &[(u64, Vec<(u64, f64)>)]) -> Result<Vec<CurvePoint>, EvalError> {
    let base = points.iter().find(|p| p.0 == 0).ok_or(EvalError::MissingBaseline)?;
    if base.1.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut out = Vec::with_capacity(points.len());
    for (seen, accs) in points {
        let mut deltas = Vec::with_capacity(base.1.len());
        let mut values = Vec::with_capacity(base.1.len());
        for &(seed, b) in &base.1 {
            let a = accs
                .iter()
                .find(|x| x.0 == seed)
                .ok_or_else(|| EvalError::MissingArtifact(format!("seed {seed} at {seen} sentences")))?
                .1;
            deltas.push(a - b);
            values.push(a);
        }
        out.push(CurvePoint {
            sentences_seen: *seen,
            accuracy_mean: mean(&values)?,
            delta_mean: mean(&deltas)?,
            delta_std: aggregate_runs(&deltas).ok().map(|x| x.1),
        });
    }
    out.sort_by_key(|p| p.sentences_seen);
    Ok(out)
}

/// Train a classifier from every snapshot for every seed and measure test
/// accuracy gains relative to the 0-sentence snapshot.
pub fn learning_curve(
    snapshots: &[Snapshot],
    train: &AtscDataset,
    test: &AtscDataset,
    vocab: &Vocab,
    atsc: &AtscRunSpec,
    seeds: &[u64],
    exec: Exec,
) -> Result<Vec<CurvePoint>, EvalError> {
    if !snapshots.iter().any(|s| s.sentences_seen == 0) {
        return Err(EvalError::MissingBaseline);
    }
    let jobs: Vec<(usize, u64)> = (0..snapshots.len()).flat_map(|i| seeds.iter().map(move |&s| (i, s))).collect();
    let accs = exec.map(&jobs, |&(i, seed)| -> Result<f64, EvalError> {
        let spec = AtscRunSpec { seed, ..atsc.clone() };
        let out = train_atsc(&snapshots[i].checkpoint.model, &spec, train, vocab, exec)?;
        Ok(evaluate_accuracy(&out.model, &test.examples, vocab, spec.max_len, exec)?)
    });
    let mut points: Vec<(u64, Vec<(u64, f64)>)> = snapshots.iter().map(|s| (s.sentences_seen, Vec::new())).collect();
    for (&(i, seed), a) in jobs.iter().zip(accs) {
        points[i].1.push((seed, a?));
    }
    curve_from_accuracies(&points)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties. `None` when a side
/// is constant or there are fewer than two points.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_delta_is_zero() {
        let pts = vec![
            (100, vec![(1, 0.7), (2, 0.8)]),
            (0, vec![(1, 0.5), (2, 0.6)]),
        ];
        let c = curve_from_accuracies(&pts).unwrap();
        assert_eq!(c[0].sentences_seen, 0);
        assert_eq!(c[0].delta_mean, 0.0);
        assert_eq!(c[0].delta_std, Some(0.0));
        assert!((c[1].delta_mean - 0.2).abs() < 1e-12);
        assert!(matches!(curve_from_accuracies(&pts[..1]), Err(EvalError::MissingBaseline)));
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0], &[5.0, 5.0]), None);
        // ties get average ranks: x ranks (1, 2.5, 2.5, 4)
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((r - 0.9486832980505138).abs() < 1e-12);
    }
}
