//! A small trainable transformer encoder with masked-LM, next-sentence and
//! three-way sentiment heads.
//!
//! Post-LN blocks, tanh-approximated GELU, learned absolute positions, and
//! token + position + segment embeddings followed by a layer norm. The MLM
//! head is tied to the token embedding table. Gradients are computed by a
//! hand-written backward pass over a per-sequence [`EncoderTape`].

mod adam;
mod checkpoint;
mod config;
mod encoder;
mod loss;
mod tensor;
mod weights;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, FORMAT_VERSION};
pub use config::{EncoderConfig, Precision};
pub use encoder::{EncoderInput, EncoderModel, EncoderOutput, EncoderTape};
pub use loss::{
    classify_atsc, cls_probs, cross_entropy, loss_atsc, loss_lm, predict, LabeledPair, LossGraph, LossParts, PROB_FLOOR,
};
pub use tensor::{softmax, Tensor};
pub use weights::{LayerWeights, Weights};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("batch has no masked positions")]
    NoMaskedPositions,
    #[error("empty batch")]
    EmptyBatch,
    #[error("graph already consumed by a previous backward pass")]
    GraphConsumed,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EncoderModel {
    /// Forward pass over a batch of independent sequences.
    pub fn forward_batch(&self, batch: &[EncoderInput<'_>], exec: crate::Exec) -> Result<Vec<EncoderOutput>, NnError> {
        exec.map(batch, |inp| self.forward(inp.input_ids, inp.segment_ids, inp.attention_mask)).into_iter().collect()
    }
}
