use serde::{Deserialize, Serialize};

use super::NnError;

/// Storage precision of parameters. `Single` rounds parameters to `f32` after
/// initialization and after every optimizer step (compute stays `f64`), so
/// 32-bit checkpoints are lossless. `Double` keeps full precision and is used
/// for gradient checking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Single,
    Double,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub num_heads: usize,
    pub ff_dim: usize,
    pub vocab_size: usize,
    pub max_len: usize,
    pub num_segments: usize,
    #[serde(default)]
    pub dropout: f64,
    #[serde(default = "default_init_std")]
    pub init_std: f64,
    #[serde(default = "default_ln_eps")]
    pub layer_norm_eps: f64,
    #[serde(default)]
    pub precision: Precision,
}

fn default_init_std() -> f64 {
    0.02
}

fn default_ln_eps() -> f64 {
    1e-12
}

impl Default for EncoderConfig {
    /// Toy scale: 2 layers, 64 hidden, 2 heads, 128 feed-forward.
    fn default() -> Self {
        EncoderConfig {
            num_layers: 2,
            hidden_dim: 64,
            num_heads: 2,
            ff_dim: 128,
            vocab_size: 8192,
            max_len: 128,
            num_segments: 2,
            dropout: 0.0,
            init_std: default_init_std(),
            layer_norm_eps: default_ln_eps(),
            precision: Precision::Single,
        }
    }
}

impl EncoderConfig {
    /// BERT-base sized encoder.
    pub fn base() -> Self {
        EncoderConfig {
            num_layers: 12,
            hidden_dim: 768,
            num_heads: 12,
            ff_dim: 3072,
            vocab_size: 30522,
            max_len: 512,
            ..Default::default()
        }
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.num_heads
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let dims = [self.num_layers, self.hidden_dim, self.num_heads, self.ff_dim, self.vocab_size, self.max_len, self.num_segments];
        if dims.contains(&0) {
            return Err(NnError::InvalidConfig("all dimensions must be >= 1".into()));
        }
        if !self.hidden_dim.is_multiple_of(self.num_heads) {
            return Err(NnError::InvalidConfig(format!(
                "hidden_dim {} not divisible by num_heads {}",
                self.hidden_dim, self.num_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NnError::InvalidConfig(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}
