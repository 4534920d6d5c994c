//! Metrics, the scenario matrix, seed aggregation and learning curves.

mod curve;
mod matrix;
mod metrics;
mod report;
mod scenario;

use thiserror::Error;

use crate::training::TrainError;

pub use curve::{curve_from_accuracies, learning_curve, spearman, CurvePoint};
pub use matrix::{
    read_runs_tsv, results_from_runs, run_matrix, summary_tsv, runs_tsv, CellEvaluator, MatrixOutcome, ModelEvaluator, RunRow,
};
pub use metrics::{accuracy, aggregate_runs, macro_f1, mean, Confusion};
pub use report::{render_curve_svg, render_table, ReferenceRow, REFERENCE_ROWS};
pub use scenario::{categorize_scenario, grid, ScenarioCategory, ScenarioResult, ScenarioSpec, SeedMetrics};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {0} predictions vs {1} gold labels")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 runs for a standard deviation, got {0}")]
    InsufficientRuns(usize),
    #[error("no 0-sentence baseline snapshot")]
    MissingBaseline,
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("malformed results table at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
