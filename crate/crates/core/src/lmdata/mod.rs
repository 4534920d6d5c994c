//! Language-model finetuning data: next-sentence pairs, masked-token
//! corruption, packing into `[CLS] A [SEP] B [SEP]` sequences, and the binary
//! shard format that stores them.

mod masking;
mod nsp;
mod pack;
mod shard;

use thiserror::Error;

pub use masking::{apply_mlm_mask, MaskAction, MaskOutcome, MaskingPolicy};
pub use nsp::{make_nsp_pairs, make_nsp_pairs_with_rate, NspPair, SentenceRef};
pub use pack::{encode_pair, generate_examples, pack_and_encode, segment_budget};
pub use shard::{read_shard, shard_stats, write_shard, Shard, ShardHeader, ShardStats};

use serde::{Deserialize, Serialize};

#[derive(Debug, Error)]
pub enum LmDataError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("document {0:?} has fewer than two sentences")]
    ShortDocument(String),
    #[error("degenerate sequence: {0}")]
    DegenerateSequence(String),
    #[error("invalid masking policy: {0}")]
    InvalidPolicy(String),
    #[error("corrupt shard: {0}")]
    CorruptShard(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One LM-finetuning instance.
///
/// `input_ids` starts with `[CLS]` and holds exactly two `[SEP]`s; segment ids
/// are 0 through the first `[SEP]` and 1 afterwards (padding included).
/// `sentences` counts the source sentences packed into the sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedPairExample {
    pub input_ids: Vec<u32>,
    pub segment_ids: Vec<u8>,
    pub mlm_positions: Vec<u32>,
    pub mlm_labels: Vec<u32>,
    pub nsp_label: bool,
    pub sentences: u32,
}

impl MaskedPairExample {
    /// Number of non-padding positions (padding is always a suffix).
    pub fn real_len(&self) -> usize {
        self.input_ids.iter().rposition(|&t| t != crate::text::Vocab::specials().pad).map_or(0, |i| i + 1)
    }

    pub fn attention_mask(&self) -> Vec<bool> {
        let n = self.real_len();
        (0..self.input_ids.len()).map(|i| i < n).collect()
    }

    /// Checks the structural invariants; returns the first violation.
    pub fn check(&self) -> Result<(), String> {
        let s = crate::text::Vocab::specials();
        let ids = &self.input_ids;
        if ids.first() != Some(&s.cls) {
            return Err("first token is not [CLS]".into());
        }
        if ids.len() != self.segment_ids.len() {
            return Err("segment ids misaligned".into());
        }
        let seps: Vec<usize> = ids.iter().enumerate().filter(|(_, &t)| t == s.sep).map(|(i, _)| i).collect();
        if seps.len() != 2 {
            return Err(format!("expected two [SEP], found {}", seps.len()));
        }
        for (i, &seg) in self.segment_ids.iter().enumerate() {
            if seg != u8::from(i > seps[0]) {
                return Err(format!("segment id {seg} at {i}"));
            }
        }
        if self.mlm_positions.len() != self.mlm_labels.len() {
            return Err("mlm positions/labels length mismatch".into());
        }
        if self.mlm_positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err("mlm positions not strictly increasing".into());
        }
        for &p in &self.mlm_positions {
            let p = p as usize;
            if p >= self.real_len() || p == 0 || seps.contains(&p) {
                return Err(format!("mlm position {p} on a special or padding slot"));
            }
        }
        Ok(())
    }
}
