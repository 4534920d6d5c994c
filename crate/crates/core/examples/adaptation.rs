//! Runs the synthetic domain-adaptation experiment and prints per-seed
//! accuracies. Environment overrides: SEEDS, BASE_EPOCHS, LM_EPOCHS, LM_LR,
//! ATSC_EPOCHS, ATSC_LR.

use absa_lab::synth::{run_adaptation_experiment, ExperimentConfig};
use absa_lab::Exec;

fn env<T: std::str::FromStr>(name: &str) -> Option<T> {
    std::env::var(name).ok().and_then(|s| s.parse().ok())
}

fn main() {
    let mut cfg = ExperimentConfig::default();
    if let Some(n) = env::<u64>("SEEDS") {
        cfg.seeds = (1..=n).collect();
    }
    cfg.base_epochs = env("BASE_EPOCHS").unwrap_or(cfg.base_epochs);
    cfg.lm_epochs = env("LM_EPOCHS").unwrap_or(cfg.lm_epochs);
    cfg.lm_lr = env("LM_LR").unwrap_or(cfg.lm_lr);
    cfg.atsc_epochs = env("ATSC_EPOCHS").unwrap_or(cfg.atsc_epochs);
    cfg.atsc_lr = env("ATSC_LR").unwrap_or(cfg.atsc_lr);
    match run_adaptation_experiment(&cfg, Exec::Parallel) {
        Ok(out) => {
            print!("{}", out.to_tsv());
            println!("mean gain {:.4} in {:.1}s", out.mean_gain(), out.seconds);
        }
        Err(e) => eprintln!("error: {e}"),
    }
}
