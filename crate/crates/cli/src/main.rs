//! `absa-lab`: corpus preparation, LM finetuning, ATSC training, the
//! evaluation matrix, input-reduction explanations and reports.
//!
//! Every command writes into its own run directory (`--out`) and refuses to
//! overwrite a completed run unless `--force` is given. Settings come from
//! built-in defaults, then an optional `--config` TOML file, then flags; the
//! resolved settings are written to `<out>/config.toml`.

mod common;
mod config;
mod corpus;
mod explain;
mod matrix;
mod synth;
mod train;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use absa_lab::Exec;

#[derive(Parser, Debug)]
#[command(name = "absa-lab", version, about = "Domain-adapted LM finetuning and aspect-target sentiment classification")]
struct Cli {
    /// Worker threads for data-parallel loops (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Run every loop sequentially.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split, filter, deduplicate and sample a review corpus, then write masked LM shards.
    PrepareCorpus(corpus::PrepareCorpusArgs),
    /// Masked-LM + NSP finetuning on prepared shards.
    LmFinetune(train::LmFinetuneArgs),
    /// Train an aspect-target sentiment classifier on SemEval-format data.
    TrainAtsc(train::TrainAtscArgs),
    /// Evaluate all (LM domain, training domain) models on both test domains.
    EvalMatrix(matrix::EvalMatrixArgs),
    /// Accuracy gain against sentences seen, from LM finetuning snapshots.
    LearningCurve(matrix::LearningCurveArgs),
    /// Input-reduction explanations for classifier predictions.
    Explain(explain::ExplainArgs),
    /// Render tables and charts from completed eval-matrix and learning-curve runs.
    Report(matrix::ReportArgs),
    /// Write the two synthetic review domains in the input formats.
    Synth(synth::SynthArgs),
    /// Run the synthetic LM-finetuning-before-cross-domain-training experiment.
    SynthExperiment(synth::SynthExperimentArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    absa_lab::exec::with_workers(cli.workers, move || match cli.command {
        Command::PrepareCorpus(a) => corpus::run(a, exec),
        Command::LmFinetune(a) => train::run_lm(a, exec),
        Command::TrainAtsc(a) => train::run_atsc(a, exec),
        Command::EvalMatrix(a) => matrix::run_eval(a, exec),
        Command::LearningCurve(a) => matrix::run_curve(a, exec),
        Command::Explain(a) => explain::run(a, exec),
        Command::Report(a) => matrix::run_report(a),
        Command::Synth(a) => synth::run(a),
        Command::SynthExperiment(a) => synth::run_experiment(a, exec),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<config::UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
