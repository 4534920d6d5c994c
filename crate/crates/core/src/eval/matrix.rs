use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::metrics::{accuracy, macro_f1};
use super::scenario::{grid, ScenarioCategory, ScenarioResult, ScenarioSpec, SeedMetrics};
use super::EvalError;
use crate::exec::Exec;
use crate::nn::{predict, EncoderModel};
use crate::text::{AtscDataset, Domain, DomainSet, Polarity, Vocab};
use crate::training::{predict_dataset, train_atsc, AtscRunSpec};

/// Produces test-set predictions for one trained model. A call trains (or
/// looks up) the classifier for `(d_lm, d_train, seed)` once and predicts
/// every test domain with it.
pub trait CellEvaluator: Sync {
    fn evaluate(&self, d_lm: DomainSet, d_train: DomainSet, seed: u64) -> Result<BTreeMap<Domain, Vec<Polarity>>, EvalError>;
}

/// One (scenario, seed) measurement; a line of the runs TSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRow {
    pub spec: ScenarioSpec,
    pub seed: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOutcome {
    pub rows: Vec<RunRow>,
    pub results: Vec<ScenarioResult>,
}

/// Evaluate all 9 (d_lm, d_train) models per seed on both test domains.
/// Rows come out in grid order, seeds in the given order.
pub fn run_matrix(
    evaluator: &dyn CellEvaluator,
    golds: &BTreeMap<Domain, Vec<Polarity>>,
    seeds: &[u64],
    exec: Exec,
) -> Result<MatrixOutcome, EvalError> {
    if seeds.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    for d in Domain::ALL {
        if !golds.contains_key(&d) {
            return Err(EvalError::MissingArtifact(format!("{d} test labels")));
        }
    }
    let mut jobs = Vec::new();
    for d_lm in DomainSet::ALL {
        for d_train in DomainSet::ALL {
            for &seed in seeds {
                jobs.push((d_lm, d_train, seed));
            }
        }
    }
    let preds = exec.map(&jobs, |&(d_lm, d_train, seed)| evaluator.evaluate(d_lm, d_train, seed));
    let mut by_job = BTreeMap::new();
    for (job, p) in jobs.iter().zip(preds) {
        by_job.insert(*job, p?);
    }
    let mut rows = Vec::new();
    for spec in grid() {
        let gold = &golds[&spec.d_test];
        for &seed in seeds {
            let p = by_job[&(spec.d_lm, spec.d_train, seed)]
                .get(&spec.d_test)
                .ok_or_else(|| EvalError::MissingArtifact(format!("{} predictions for {spec}", spec.d_test)))?;
            rows.push(RunRow { spec, seed, accuracy: accuracy(p, gold)?, macro_f1: macro_f1(p, gold)? });
        }
    }
    let results = results_from_runs(&rows);
    Ok(MatrixOutcome { rows, results })
}

/// Group rows per scenario (grid order, skipping scenarios without rows).
pub fn results_from_runs(rows: &[RunRow]) -> Vec<ScenarioResult> {
    grid()
        .into_iter()
        .filter_map(|spec| {
            let runs: Vec<SeedMetrics> = rows
                .iter()
                .filter(|r| r.spec == spec)
                .map(|r| SeedMetrics { seed: r.seed, accuracy: r.accuracy, macro_f1: r.macro_f1 })
                .collect();
            (!runs.is_empty()).then(|| ScenarioResult::from_runs(spec, runs))
        })
        .collect()
}

const RUNS_HEADER: &str = "d_lm\td_train\td_test\tcategory\tseed\taccuracy\tmacro_f1";

pub fn runs_tsv(rows: &[RunRow]) -> String {
    let mut s = String::from(RUNS_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}",
            r.spec.d_lm,
            r.spec.d_train,
            r.spec.d_test,
            r.spec.category(),
            r.seed,
            r.accuracy,
            r.macro_f1
        );
    }
    s
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{v:.6}"))
}

pub fn summary_tsv(results: &[ScenarioResult]) -> String {
    let mut s = String::from("d_lm\td_train\td_test\tcategory\truns\taccuracy_mean\taccuracy_std\tmacro_f1_mean\tmacro_f1_std\n");
    for r in results {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{:.6}\t{}\t{:.6}\t{}",
            r.spec.d_lm,
            r.spec.d_train,
            r.spec.d_test,
            r.category(),
            r.runs.len(),
            r.accuracy_mean,
            opt(r.accuracy_std),
            r.macro_f1_mean,
            opt(r.macro_f1_std)
        );
    }
    s
}

pub fn read_runs_tsv(text: &str) -> Result<Vec<RunRow>, EvalError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RUNS_HEADER => {}
        _ => return Err(EvalError::Parse { line: 1, reason: "unexpected header".into() }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| EvalError::Parse { line: i + 1, reason: reason.to_string() };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 7 {
            return Err(bad("expected 7 fields"));
        }
        let spec = ScenarioSpec::new(
            f[0].parse().map_err(|_| bad("bad d_lm"))?,
            f[1].parse().map_err(|_| bad("bad d_train"))?,
            f[2].parse().map_err(|_| bad("bad d_test"))?,
        );
        if ScenarioCategory::from_name(f[3]) != Some(spec.category()) {
            return Err(bad("category does not match domains"));
        }
        rows.push(RunRow {
            spec,
            seed: f[4].parse().map_err(|_| bad("bad seed"))?,
            accuracy: f[5].parse().map_err(|_| bad("bad accuracy"))?,
            macro_f1: f[6].parse().map_err(|_| bad("bad macro_f1"))?,
        });
    }
    Ok(rows)
}

/// Trains an ATSC classifier on top of each LM model and predicts both test
/// sets. A missing joint training set is built by concatenating the two
/// single-domain sets.
pub struct ModelEvaluator {
    pub lm_models: BTreeMap<DomainSet, EncoderModel>,
    pub train: BTreeMap<DomainSet, AtscDataset>,
    pub test: BTreeMap<Domain, AtscDataset>,
    pub vocab: Vocab,
    /// Template; `d_train` and `seed` are set per run.
    pub atsc: AtscRunSpec,
    pub exec: Exec,
}

impl ModelEvaluator {
    pub fn golds(&self) -> BTreeMap<Domain, Vec<Polarity>> {
        self.test.iter().map(|(d, ds)| (*d, ds.examples.iter().map(|e| e.label).collect())).collect()
    }

    fn train_set(&self, d: DomainSet) -> Result<AtscDataset, EvalError> {
        if let Some(ds) = self.train.get(&d) {
            return Ok(ds.clone());
        }
        let missing = || EvalError::MissingArtifact(format!("{d} training set"));
        if d != DomainSet::Joint {
            return Err(missing());
        }
        let parts: Vec<&AtscDataset> = Domain::ALL
            .iter()
            .map(|x| self.train.get(&DomainSet::from(*x)).ok_or_else(missing))
            .collect::<Result<_, _>>()?;
        AtscDataset::concat(&parts).ok_or_else(missing)
    }
}

impl CellEvaluator for ModelEvaluator {
    fn evaluate(&self, d_lm: DomainSet, d_train: DomainSet, seed: u64) -> Result<BTreeMap<Domain, Vec<Polarity>>, EvalError> {
        let lm = self.lm_models.get(&d_lm).ok_or_else(|| EvalError::MissingArtifact(format!("{d_lm} LM checkpoint")))?;
        let train = self.train_set(d_train)?;
        let spec = AtscRunSpec { d_train, seed, ..self.atsc.clone() };
        let outcome = train_atsc(lm, &spec, &train, &self.vocab, self.exec)?;
        let mut out = BTreeMap::new();
        for (d, ds) in &self.test {
            let probs = predict_dataset(&outcome.model, &ds.examples, &self.vocab, spec.max_len, self.exec)?;
            out.insert(*d, probs.iter().map(predict).collect());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Polarity::*;

    /// Predicts a fixed label per training domain, independent of seed.
    struct Stub;

    impl CellEvaluator for Stub {
        fn evaluate(&self, _: DomainSet, d_train: DomainSet, _: u64) -> Result<BTreeMap<Domain, Vec<Polarity>>, EvalError> {
            let p = match d_train {
                DomainSet::Laptops => Positive,
                DomainSet::Restaurants => Negative,
                DomainSet::Joint => Neutral,
            };
            Ok(Domain::ALL.iter().map(|d| (*d, vec![p; 4])).collect())
        }
    }

    fn golds() -> BTreeMap<Domain, Vec<Polarity>> {
        BTreeMap::from([
            (Domain::Laptops, vec![Positive, Positive, Negative, Neutral]),
            (Domain::Restaurants, vec![Negative, Negative, Negative, Positive]),
        ])
    }

    #[test]
    fn stub_matrix_matches_hand_metrics() {
        let out = run_matrix(&Stub, &golds(), &[7], Exec::Sequential).unwrap();
        assert_eq!(out.rows.len(), 18);
        assert_eq!(out.results.len(), 18);
        for r in &out.rows {
            let expect = match (r.spec.d_train, r.spec.d_test) {
                (DomainSet::Laptops, Domain::Laptops) => (0.5, (2.0 / 3.0) / 3.0),
                (DomainSet::Restaurants, Domain::Laptops) => (0.25, (2.0 / 5.0) / 3.0),
                (DomainSet::Joint, Domain::Laptops) => (0.25, (2.0 / 5.0) / 3.0),
                (DomainSet::Laptops, Domain::Restaurants) => (0.25, (2.0 / 5.0) / 3.0),
                (DomainSet::Restaurants, Domain::Restaurants) => (0.75, (6.0 / 7.0) / 3.0),
                (DomainSet::Joint, Domain::Restaurants) => (0.0, 0.0),
            };
            assert!((r.accuracy - expect.0).abs() < 1e-12, "{}", r.spec);
            assert!((r.macro_f1 - expect.1).abs() < 1e-12, "{}", r.spec);
        }
    }

    #[test]
    fn tsv_round_trip_and_parallel_agree() {
        let seq = run_matrix(&Stub, &golds(), &[1, 2, 3], Exec::Sequential).unwrap();
        let par = run_matrix(&Stub, &golds(), &[1, 2, 3], Exec::Parallel).unwrap();
        assert_eq!(runs_tsv(&seq.rows), runs_tsv(&par.rows));
        let text = runs_tsv(&seq.rows);
        assert_eq!(text.lines().count(), 1 + 54);
        let back = read_runs_tsv(&text).unwrap();
        assert_eq!(runs_tsv(&back), text);
        assert_eq!(summary_tsv(&results_from_runs(&back)), summary_tsv(&seq.results));
    }

    #[test]
    fn missing_labels() {
        let mut g = golds();
        g.remove(&Domain::Laptops);
        assert!(matches!(run_matrix(&Stub, &g, &[1], Exec::Sequential), Err(EvalError::MissingArtifact(_))));
    }
}
