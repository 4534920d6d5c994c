use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use absa_lab::synth::{generate, run_adaptation_experiment, write_synth_data, ExperimentConfig, SynthConfig};
use absa_lab::text::Domain;
use absa_lab::Exec;

use crate::common::{f, start_run};
use crate::config::{merge, usage};

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reviews_per_domain: Option<usize>,
    #[arg(long)]
    pub train_examples: Option<usize>,
    #[arg(long)]
    pub test_examples: Option<usize>,
}

pub fn run(flags: SynthArgs) -> Result<()> {
    let mut a = merge(&flags, flags.config.as_deref())?;
    let d = SynthConfig::default();
    let seed = *a.seed.get_or_insert(0);
    let cfg = SynthConfig {
        reviews_per_domain: *a.reviews_per_domain.get_or_insert(d.reviews_per_domain),
        train_examples: *a.train_examples.get_or_insert(d.train_examples),
        test_examples: *a.test_examples.get_or_insert(d.test_examples),
        ..d
    };
    let rd = start_run(&a.out, flags.force, &a)?;
    write_synth_data(&generate(&cfg, seed), rd.path())?;
    rd.write_summary(&[("command", "synth".into()), ("seed", seed.to_string())])?;
    println!("wrote synthetic data to {}", rd.path().display());
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthExperimentArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Domain the classifier is trained on.
    #[arg(long)]
    pub source: Option<Domain>,
    /// Domain of the unlabeled LM text and of the test set.
    #[arg(long)]
    pub target: Option<Domain>,
    #[arg(long)]
    pub base_epochs: Option<usize>,
    #[arg(long)]
    pub lm_epochs: Option<usize>,
    #[arg(long)]
    pub lm_lr: Option<f64>,
    #[arg(long)]
    pub atsc_epochs: Option<usize>,
    #[arg(long)]
    pub atsc_lr: Option<f64>,
}

pub fn run_experiment(flags: SynthExperimentArgs, exec: Exec) -> Result<()> {
    let mut a = merge(&flags, flags.config.as_deref())?;
    let d = ExperimentConfig::default();
    let cfg = ExperimentConfig {
        seeds: a.seeds.get_or_insert(d.seeds.clone()).clone(),
        source: *a.source.get_or_insert(d.source),
        target: *a.target.get_or_insert(d.target),
        base_epochs: *a.base_epochs.get_or_insert(d.base_epochs),
        lm_epochs: *a.lm_epochs.get_or_insert(d.lm_epochs),
        lm_lr: *a.lm_lr.get_or_insert(d.lm_lr),
        atsc_epochs: *a.atsc_epochs.get_or_insert(d.atsc_epochs),
        atsc_lr: *a.atsc_lr.get_or_insert(d.atsc_lr),
        ..d
    };
    if cfg.source == cfg.target {
        return Err(usage("--source and --target must differ"));
    }
    if cfg.seeds.is_empty() {
        return Err(usage("--seeds is empty"));
    }
    let rd = start_run(&a.out, flags.force, &a)?;
    let out = run_adaptation_experiment(&cfg, exec)?;
    std::fs::write(rd.join("experiment.tsv"), out.to_tsv())?;
    rd.write_summary(&[
        ("command", "synth-experiment".into()),
        ("seeds", cfg.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")),
        ("mean_gain", f(out.mean_gain())),
    ])?;
    print!("{}", out.to_tsv());
    println!("mean gain {:.2} points", 100.0 * out.mean_gain());
    Ok(())
}
