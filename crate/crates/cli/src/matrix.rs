use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use absa_lab::eval::{
    learning_curve, read_runs_tsv, render_curve_svg, render_table, results_from_runs, run_matrix, runs_tsv, spearman,
    summary_tsv, CellEvaluator, CurvePoint, EvalError, ModelEvaluator, ScenarioCategory, ScenarioSpec,
};
use absa_lab::nn::AdamConfig;
use absa_lab::text::{AtscDataset, Domain, DomainSet, Polarity, Split};
use absa_lab::training::{AtscRunSpec, RunDir, Snapshot};
use absa_lab::{seed, Exec};

use crate::common::{dataset_from, f, load_checkpoint, load_vocab, start_run};
use crate::config::{existing, merge, required, usage};

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalMatrixArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace trained models with deterministic stub predictors.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    pub stub: Option<bool>,
    #[arg(long)]
    pub lm_laptops: Option<PathBuf>,
    #[arg(long)]
    pub lm_restaurants: Option<PathBuf>,
    #[arg(long)]
    pub lm_joint: Option<PathBuf>,
    #[arg(long)]
    pub train_laptops: Option<PathBuf>,
    #[arg(long)]
    pub train_restaurants: Option<PathBuf>,
    #[arg(long)]
    pub test_laptops: Option<PathBuf>,
    #[arg(long)]
    pub test_restaurants: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    #[arg(long)]
    pub max_len: Option<usize>,
}

fn default_seeds() -> Vec<u64> {
    (1..=9).collect()
}

impl EvalMatrixArgs {
    fn resolve(mut self) -> Self {
        let full = AtscRunSpec::full_scale(DomainSet::Joint, 0);
        self.stub.get_or_insert(false);
        self.seeds.get_or_insert_with(default_seeds);
        self.epochs.get_or_insert(full.epochs);
        self.batch_size.get_or_insert(full.batch_size);
        self.lr.get_or_insert(full.adam.lr);
        self.validation_fraction.get_or_insert(full.validation_fraction);
        self
    }
}

/// Predicts the gold label with a probability that depends on the scenario
/// category, from a stream seeded by the cell and run seed.
struct StubEvaluator {
    golds: BTreeMap<Domain, Vec<Polarity>>,
}

impl CellEvaluator for StubEvaluator {
    fn evaluate(&self, d_lm: DomainSet, d_train: DomainSet, s: u64) -> Result<BTreeMap<Domain, Vec<Polarity>>, EvalError> {
        let mut out = BTreeMap::new();
        for (d, golds) in &self.golds {
            let spec = ScenarioSpec::new(d_lm, d_train, *d);
            let hit = match spec.category() {
                ScenarioCategory::InDomain | ScenarioCategory::JointDomain => 0.8,
                ScenarioCategory::CrossDomainAdaptation => 0.75,
                ScenarioCategory::CrossDomain => 0.6,
            };
            let mut rng = seed::rng_for(s, &format!("stub:{d_lm}:{d_train}:{d}"));
            let preds = golds
                .iter()
                .map(|g| if rng.gen_bool(hit) { *g } else { Polarity::from_index((g.index() + 1) % 3).unwrap_or(*g) })
                .collect();
            out.insert(*d, preds);
        }
        Ok(out)
    }
}

fn stub_golds() -> BTreeMap<Domain, Vec<Polarity>> {
    Domain::ALL
        .into_iter()
        .map(|d| (d, (0..30).map(|i| Polarity::from_index(i % 3).unwrap_or(Polarity::Neutral)).collect()))
        .collect()
}

fn test_sets(a: &EvalMatrixArgs) -> Result<Option<BTreeMap<Domain, AtscDataset>>> {
    let files = [(Domain::Laptops, &a.test_laptops), (Domain::Restaurants, &a.test_restaurants)];
    if files.iter().all(|(_, p)| p.is_none()) {
        return Ok(None);
    }
    let mut out = BTreeMap::new();
    for (d, p) in files {
        let p = existing(p, &format!("test-{d}"))?;
        out.insert(d, dataset_from(&[p], Some(d), Split::Test)?);
    }
    Ok(Some(out))
}

pub fn run_eval(flags: EvalMatrixArgs, exec: Exec) -> Result<()> {
    let a = merge(&flags, flags.config.as_deref())?.resolve();
    let seeds = a.seeds.clone().unwrap_or_else(default_seeds);
    if seeds.is_empty() {
        return Err(usage("--seeds is empty"));
    }
    let tests = test_sets(&a)?;
    let evaluator: Box<dyn CellEvaluator>;
    let golds;
    if a.stub == Some(true) {
        golds = match &tests {
            Some(t) => t.iter().map(|(d, ds)| (*d, ds.examples.iter().map(|e| e.label).collect())).collect(),
            None => stub_golds(),
        };
        evaluator = Box::new(StubEvaluator { golds: golds.clone() });
    } else {
        let test = tests.ok_or_else(|| usage("missing --test-laptops / --test-restaurants"))?;
        let vocab = load_vocab(&existing(&a.vocab, "vocab")?)?;
        let mut lm_models = BTreeMap::new();
        for (d, p) in [(DomainSet::Laptops, &a.lm_laptops), (DomainSet::Restaurants, &a.lm_restaurants), (DomainSet::Joint, &a.lm_joint)] {
            let ck = load_checkpoint(&existing(p, &format!("lm-{d}"))?)?;
            lm_models.insert(d, ck.model);
        }
        let mut train = BTreeMap::new();
        for (d, p) in [(Domain::Laptops, &a.train_laptops), (Domain::Restaurants, &a.train_restaurants)] {
            train.insert(DomainSet::from(d), dataset_from(&[existing(p, &format!("train-{d}"))?], Some(d), Split::Train)?);
        }
        let max_len = a.max_len.unwrap_or(lm_models[&DomainSet::Laptops].config.max_len);
        let atsc = AtscRunSpec {
            d_train: DomainSet::Joint,
            epochs: a.epochs.unwrap_or(7),
            batch_size: a.batch_size.unwrap_or(32),
            adam: AdamConfig { lr: a.lr.unwrap_or(3e-5), ..AdamConfig::default() },
            seed: 0,
            validation_fraction: a.validation_fraction.unwrap_or(0.1),
            max_len,
        };
        atsc.validate().map_err(|e| usage(e.to_string()))?;
        let m = ModelEvaluator { lm_models, train, test, vocab, atsc, exec };
        golds = m.golds();
        evaluator = Box::new(m);
    }
    let rd = start_run(&a.out, flags.force, &a)?;
    let out = run_matrix(evaluator.as_ref(), &golds, &seeds, exec)?;
    std::fs::write(rd.join("runs.tsv"), runs_tsv(&out.rows))?;
    std::fs::write(rd.join("summary.tsv"), summary_tsv(&out.results))?;
    let table = render_table(&out.results, true);
    std::fs::write(rd.join("table.txt"), &table)?;
    let seeds_text = seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
    rd.write_summary(&[("command", "eval-matrix".into()), ("seeds", seeds_text), ("rows", out.rows.len().to_string())])?;
    print!("{table}");
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningCurveArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// A completed lm-finetune run directory with a 0-sentence snapshot.
    #[arg(long)]
    pub lm_run: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub train: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Test domain; also the series name in charts.
    #[arg(long)]
    pub domain: Option<Domain>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub max_len: Option<usize>,
}

fn load_snapshots(dir: &Path) -> Result<Vec<Snapshot>> {
    let table = dir.join("snapshots.tsv");
    let text = std::fs::read_to_string(&table).map_err(|_| usage(format!("missing {}", table.display())))?;
    let mut out = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        let bad = || usage(format!("malformed line in {}: {line}", table.display()));
        if f.len() != 3 {
            return Err(bad());
        }
        out.push(Snapshot {
            scheduled: f[0].parse().map_err(|_| bad())?,
            sentences_seen: f[1].parse().map_err(|_| bad())?,
            checkpoint: load_checkpoint(&RunDir::open(dir).checkpoint_path(f[2]))?,
        });
    }
    Ok(out)
}

pub fn curve_tsv(series: &str, points: &[CurvePoint]) -> String {
    let mut s = String::from("series\tsentences_seen\taccuracy_mean\tdelta_mean\tdelta_std\n");
    for p in points {
        let std = p.delta_std.map_or("NA".into(), f);
        let _ = writeln!(s, "{series}\t{}\t{}\t{}\t{std}", p.sentences_seen, f(p.accuracy_mean), f(p.delta_mean));
    }
    s
}

pub fn read_curve_tsv(text: &str) -> Result<Vec<(String, CurvePoint)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1).filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        let bad = || usage(format!("malformed curve line {}: {line}", i + 1));
        if f.len() != 5 {
            return Err(bad());
        }
        out.push((
            f[0].to_string(),
            CurvePoint {
                sentences_seen: f[1].parse().map_err(|_| bad())?,
                accuracy_mean: f[2].parse().map_err(|_| bad())?,
                delta_mean: f[3].parse().map_err(|_| bad())?,
                delta_std: if f[4] == "NA" { None } else { Some(f[4].parse().map_err(|_| bad())?) },
            },
        ));
    }
    Ok(out)
}

pub fn run_curve(flags: LearningCurveArgs, exec: Exec) -> Result<()> {
    let mut a = merge(&flags, flags.config.as_deref())?;
    a.seeds.get_or_insert_with(default_seeds);
    let full = AtscRunSpec::full_scale(DomainSet::Joint, 0);
    a.epochs.get_or_insert(full.epochs);
    a.batch_size.get_or_insert(full.batch_size);
    a.lr.get_or_insert(full.adam.lr);
    let lm_run = existing(&a.lm_run, "lm-run")?;
    let vocab_path = match &a.vocab {
        Some(_) => existing(&a.vocab, "vocab")?,
        None => lm_run.join("vocab.txt"),
    };
    let vocab = load_vocab(&vocab_path)?;
    let domain = required(&a.domain, "domain")?;
    let train = dataset_from(&required(&a.train, "train")?, Some(domain), Split::Train)?;
    let test = dataset_from(&[existing(&a.test, "test")?], Some(domain), Split::Test)?;
    let snapshots = load_snapshots(&lm_run)?;
    let max_len = a.max_len.or_else(|| snapshots.first().map(|s| s.checkpoint.model.config.max_len)).unwrap_or(256);
    let atsc = AtscRunSpec {
        d_train: DomainSet::from(domain),
        epochs: a.epochs.unwrap_or(7),
        batch_size: a.batch_size.unwrap_or(32),
        adam: AdamConfig { lr: a.lr.unwrap_or(3e-5), ..AdamConfig::default() },
        seed: 0,
        validation_fraction: 0.0,
        max_len,
    };
    let seeds = a.seeds.clone().unwrap_or_default();
    let rd = start_run(&a.out, flags.force, &a)?;
    let points = learning_curve(&snapshots, &train, &test, &vocab, &atsc, &seeds, exec)?;
    std::fs::write(rd.join("curve.tsv"), curve_tsv(domain.name(), &points))?;
    std::fs::write(rd.join("curve.svg"), render_curve_svg(&[(domain.name().to_string(), points.clone())]))?;
    let xs: Vec<f64> = points.iter().map(|p| p.sentences_seen as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.delta_mean).collect();
    let rho = spearman(&xs, &ys).map_or("NA".into(), f);
    let seeds_text = seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
    rd.write_summary(&[("command", "learning-curve".into()), ("seeds", seeds_text), ("spearman", rho.clone())])?;
    println!("{} points, spearman(sentences, gain) = {rho}", points.len());
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    /// Completed eval-matrix run directories.
    #[arg(long, value_delimiter = ',')]
    pub runs: Option<Vec<PathBuf>>,
    /// Completed learning-curve run directories.
    #[arg(long, value_delimiter = ',')]
    pub curves: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include the published full-scale reference rows.
    #[arg(long)]
    pub reference: Option<bool>,
}

fn completed(dir: &Path, file: &str) -> Result<String> {
    if !RunDir::open(dir).is_complete() {
        return Err(EvalError::MissingArtifact(format!("{} is not a completed run", dir.display())).into());
    }
    let p = dir.join(file);
    std::fs::read_to_string(&p).map_err(|_| EvalError::MissingArtifact(p.display().to_string()).into())
}

pub fn run_report(flags: ReportArgs) -> Result<()> {
    let mut a = merge(&flags, flags.config.as_deref())?;
    a.reference.get_or_insert(true);
    a.runs.get_or_insert_with(Vec::new);
    a.curves.get_or_insert_with(Vec::new);
    let runs = a.runs.clone().unwrap_or_default();
    let curves = a.curves.clone().unwrap_or_default();
    if runs.is_empty() && curves.is_empty() {
        return Err(usage("nothing to report: pass --runs and/or --curves"));
    }
    let mut rows = Vec::new();
    for d in &runs {
        let text = completed(d, "runs.tsv")?;
        rows.extend(read_runs_tsv(&text).with_context(|| format!("{}", d.join("runs.tsv").display()))?);
    }
    let mut series: BTreeMap<String, Vec<CurvePoint>> = BTreeMap::new();
    for d in &curves {
        for (name, p) in read_curve_tsv(&completed(d, "curve.tsv")?)? {
            series.entry(name).or_default().push(p);
        }
    }
    let rd = start_run(&a.out, flags.force, &a)?;
    if !runs.is_empty() {
        let results = results_from_runs(&rows);
        let table = render_table(&results, a.reference.unwrap_or(true));
        std::fs::write(rd.join("table.txt"), &table)?;
        std::fs::write(rd.join("summary.tsv"), summary_tsv(&results))?;
        print!("{table}");
    }
    if !series.is_empty() {
        let list: Vec<(String, Vec<CurvePoint>)> = series
            .into_iter()
            .map(|(k, mut v)| {
                v.sort_by_key(|p| p.sentences_seen);
                (k, v)
            })
            .collect();
        std::fs::write(rd.join("curve.svg"), render_curve_svg(&list))?;
    }
    rd.write_summary(&[("command", "report".into()), ("runs", runs.len().to_string()), ("curves", curves.len().to_string())])?;
    Ok(())
}
