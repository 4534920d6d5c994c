//! Binary checkpoint container.
//!
//! Layout: 8-byte magic `ABSACKPT`, `u32` format version, `u32` header length,
//! a JSON header (config, tensor names and shapes, optional vocabulary hash,
//! optimizer hyperparameters, free-form metadata), then the parameter
//! tensors in header order as little-endian `f32` (or `f64` when the config
//! asks for double precision), then the optimizer moments as `f64`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdamConfig, AdamState, EncoderConfig, EncoderModel, NnError, Precision, Weights};

const MAGIC: &[u8; 8] = b"ABSACKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: EncoderModel,
    pub vocab_hash: Option<String>,
    pub optimizer: Option<AdamState>,
    pub meta: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct OptimizerEntry {
    t: u64,
    hyper: AdamConfig,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    config: EncoderConfig,
    vocab_hash: Option<String>,
    tensors: Vec<TensorEntry>,
    optimizer: Option<OptimizerEntry>,
    meta: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn new(model: EncoderModel) -> Checkpoint {
        Checkpoint { model, vocab_hash: None, optimizer: None, meta: BTreeMap::new() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let w = &self.model.weights;
        let header = Header {
            version: FORMAT_VERSION,
            config: self.model.config.clone(),
            vocab_hash: self.vocab_hash.clone(),
            tensors: w.named().into_iter().map(|(name, t)| TensorEntry { name, shape: t.shape.clone() }).collect(),
            optimizer: self.optimizer.as_ref().map(|o| OptimizerEntry { t: o.t, hyper: o.hyper }),
            meta: self.meta.clone(),
        };
        let head = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(head.len() as u32).to_le_bytes());
        out.extend_from_slice(&head);
        let single = self.model.config.precision == Precision::Single;
        for t in w.tensors() {
            for &x in &t.data {
                if single {
                    out.extend_from_slice(&(x as f32).to_le_bytes());
                } else {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        if let Some(o) = &self.optimizer {
            for t in o.m.tensors().into_iter().chain(o.v.tensors()) {
                t.data.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, NnError> {
        let bad = |m: &str| NnError::Checkpoint(m.to_string());
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint (bad magic)"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported format version {version}")));
        }
        let hlen = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let head = bytes.get(16..16 + hlen).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(head).map_err(|e| bad(&format!("bad header: {e}")))?;
        header.config.validate()?;
        let mut weights = Weights::zeros(&header.config);
        {
            let named = weights.named();
            if named.len() != header.tensors.len()
                || named.iter().zip(&header.tensors).any(|((n, t), e)| *n != e.name || t.shape != e.shape)
            {
                return Err(bad("tensor table does not match config"));
            }
        }
        let mut pos = 16 + hlen;
        let single = header.config.precision == Precision::Single;
        let mut read = |buf: &mut [f64], wide: bool| -> Result<(), NnError> {
            let size = if wide { 8 } else { 4 };
            let raw = bytes.get(pos..pos + buf.len() * size).ok_or_else(|| bad("truncated tensor data"))?;
            for (x, c) in buf.iter_mut().zip(raw.chunks_exact(size)) {
                *x = if wide { f64::from_le_bytes(c.try_into().unwrap()) } else { f32::from_le_bytes(c.try_into().unwrap()) as f64 };
            }
            pos += buf.len() * size;
            Ok(())
        };
        for t in weights.tensors_mut() {
            read(&mut t.data, !single)?;
        }
        let optimizer = match header.optimizer {
            Some(o) => {
                let mut m = Weights::zeros(&header.config);
                let mut v = Weights::zeros(&header.config);
                for t in m.tensors_mut().into_iter().chain(v.tensors_mut()) {
                    read(&mut t.data, true)?;
                }
                Some(AdamState { t: o.t, hyper: o.hyper, m, v })
            }
            None => None,
        };
        if pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        Ok(Checkpoint {
            model: EncoderModel { config: header.config, weights },
            vocab_hash: header.vocab_hash,
            optimizer,
            meta: header.meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, NnError> {
        Checkpoint::from_bytes(&fs::read(path)?)
    }
}
