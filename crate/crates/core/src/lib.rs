//! Domain-adapted transformer encoders for aspect-target sentiment
//! classification (ATSC).
//!
//! The crate covers the whole experimental pipeline at desk scale:
//!
//! * [`text`]: tokenization, vocabulary, sentence splitting, review-corpus
//!   preparation and SemEval 2014 XML ingestion.
//! * [`lmdata`]: next-sentence pairs, masked-token corruption and packing into
//!   binary shards for language-model finetuning.
//! * [`nn`]: a small post-LN transformer encoder with MLM, NSP and ATSC heads,
//!   hand-written backward pass, Adam, and checkpoints.
//! * [`training`]: LM finetuning with sentence-count snapshots and supervised
//!   ATSC training.
//! * [`eval`]: metrics, the LM/train/test scenario matrix, seed aggregation,
//!   learning curves and reports.
//! * [`interpret`]: input reduction for ATSC predictions.
//! * [`synth`]: synthetic two-domain corpora used by the scaled experiments.

pub mod eval;
pub mod exec;
pub mod interpret;
pub mod lmdata;
pub mod nn;
pub mod seed;
pub mod synth;
pub mod text;
pub mod training;

pub use exec::Exec;
pub use text::{Domain, DomainSet, Polarity};
