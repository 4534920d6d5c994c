//! The two training stages: self-supervised LM finetuning on a domain corpus
//! and supervised ATSC training, plus the on-disk run directory.

mod atsc;
mod lm;
mod rundir;

use thiserror::Error;

pub use atsc::{
    encode_atsc_input, evaluate_accuracy, predict_dataset, train_atsc, AtscEpochRecord, AtscOutcome, AtscRunSpec,
    AtscStepRecord,
};
pub use lm::{lm_finetune, FinetuneOutcome, FinetuneRunSpec, LmStepRecord, Snapshot};
pub use rundir::{RunDir, RunDirError};

use crate::lmdata::LmDataError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),
    #[error("corrupt shard: {0}")]
    CorruptShard(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("refusing to train on {0:?}-split data")]
    WrongSplit(crate::text::Split),
    #[error("invalid run spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Data(#[from] LmDataError),
}
