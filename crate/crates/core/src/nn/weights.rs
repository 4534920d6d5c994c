use rand_distr::{Distribution, Normal};

use super::{EncoderConfig, NnError, Tensor};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub wq: Tensor,
    pub bq: Tensor,
    pub wk: Tensor,
    pub bk: Tensor,
    pub wv: Tensor,
    pub bv: Tensor,
    pub wo: Tensor,
    pub bo: Tensor,
    pub ln1_g: Tensor,
    pub ln1_b: Tensor,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
    pub ln2_g: Tensor,
    pub ln2_b: Tensor,
}

/// Every trainable tensor of the encoder and its heads. The same struct holds
/// gradients and optimizer moments.
///
/// Linear layers inside the encoder are stored `in x out` (`y = x W + b`);
/// the NSP and classifier heads are stored `out x in` (`logits = W h + b`).
/// The MLM head reuses `tok_emb` and only owns its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub tok_emb: Tensor,
    pub pos_emb: Tensor,
    pub seg_emb: Tensor,
    pub emb_ln_g: Tensor,
    pub emb_ln_b: Tensor,
    pub layers: Vec<LayerWeights>,
    pub mlm_bias: Tensor,
    pub nsp_w: Tensor,
    pub nsp_b: Tensor,
    pub cls_w: Tensor,
    pub cls_b: Tensor,
}

macro_rules! layer_fields {
    ($m:ident) => {
        $m!(wq, bq, wk, bk, wv, bv, wo, bo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b)
    };
}

impl LayerWeights {
    fn named(&self, prefix: &str) -> Vec<(String, &Tensor)> {
        macro_rules! collect {
            ($($f:ident),*) => { vec![$((format!("{prefix}.{}", stringify!($f)), &self.$f)),*] };
        }
        layer_fields!(collect)
    }

    fn named_mut(&mut self, prefix: &str) -> Vec<(String, &mut Tensor)> {
        macro_rules! collect {
            ($($f:ident),*) => { vec![$((format!("{prefix}.{}", stringify!($f)), &mut self.$f)),*] };
        }
        layer_fields!(collect)
    }
}

impl Weights {
    /// All tensors zero, shaped for `cfg`.
    pub fn zeros(cfg: &EncoderConfig) -> Weights {
        let (d, f) = (cfg.hidden_dim, cfg.ff_dim);
        let z = Tensor::zeros;
        let layer = || LayerWeights {
            wq: z(&[d, d]),
            bq: z(&[d]),
            wk: z(&[d, d]),
            bk: z(&[d]),
            wv: z(&[d, d]),
            bv: z(&[d]),
            wo: z(&[d, d]),
            bo: z(&[d]),
            ln1_g: z(&[d]),
            ln1_b: z(&[d]),
            w1: z(&[d, f]),
            b1: z(&[f]),
            w2: z(&[f, d]),
            b2: z(&[d]),
            ln2_g: z(&[d]),
            ln2_b: z(&[d]),
        };
        Weights {
            tok_emb: z(&[cfg.vocab_size, d]),
            pos_emb: z(&[cfg.max_len, d]),
            seg_emb: z(&[cfg.num_segments, d]),
            emb_ln_g: z(&[d]),
            emb_ln_b: z(&[d]),
            layers: (0..cfg.num_layers).map(|_| layer()).collect(),
            mlm_bias: z(&[cfg.vocab_size]),
            nsp_w: z(&[2, d]),
            nsp_b: z(&[2]),
            cls_w: z(&[3, d]),
            cls_b: z(&[3]),
        }
    }

    /// Normal(0, init_std) for matrices and embeddings, zero biases, unit
    /// layer-norm gains. Pure function of `(cfg, seed)`.
    pub fn init(cfg: &EncoderConfig, seed: u64) -> Weights {
        let mut w = Weights::zeros(cfg);
        let normal = Normal::new(0.0, cfg.init_std).expect("init_std must be finite and >= 0");
        for (name, t) in w.named_mut() {
            let leaf = name.rsplit('.').next().unwrap_or(&name);
            if leaf.ends_with("_g") {
                t.data.fill(1.0);
            } else if t.shape.len() == 2 {
                let mut rng = seed::rng_for(seed, &format!("init:{name}"));
                t.data.iter_mut().for_each(|v| *v = normal.sample(&mut rng));
            }
        }
        w
    }

    /// Tensors in a fixed order with stable names (`layers.0.wq`, ...).
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut v = vec![
            ("tok_emb".to_string(), &self.tok_emb),
            ("pos_emb".to_string(), &self.pos_emb),
            ("seg_emb".to_string(), &self.seg_emb),
            ("emb_ln_g".to_string(), &self.emb_ln_g),
            ("emb_ln_b".to_string(), &self.emb_ln_b),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            v.extend(l.named(&format!("layers.{i}")));
        }
        v.extend([
            ("mlm_bias".to_string(), &self.mlm_bias),
            ("nsp_w".to_string(), &self.nsp_w),
            ("nsp_b".to_string(), &self.nsp_b),
            ("cls_w".to_string(), &self.cls_w),
            ("cls_b".to_string(), &self.cls_b),
        ]);
        v
    }

    pub fn named_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut v = vec![
            ("tok_emb".to_string(), &mut self.tok_emb),
            ("pos_emb".to_string(), &mut self.pos_emb),
            ("seg_emb".to_string(), &mut self.seg_emb),
            ("emb_ln_g".to_string(), &mut self.emb_ln_g),
            ("emb_ln_b".to_string(), &mut self.emb_ln_b),
        ];
        for (i, l) in self.layers.iter_mut().enumerate() {
            v.extend(l.named_mut(&format!("layers.{i}")));
        }
        v.extend([
            ("mlm_bias".to_string(), &mut self.mlm_bias),
            ("nsp_w".to_string(), &mut self.nsp_w),
            ("nsp_b".to_string(), &mut self.nsp_b),
            ("cls_w".to_string(), &mut self.cls_w),
            ("cls_b".to_string(), &mut self.cls_b),
        ]);
        v
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        self.named().into_iter().map(|(_, t)| t).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        self.named_mut().into_iter().map(|(_, t)| t).collect()
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn same_shape(&self, other: &Weights) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.shape == y.shape)
    }

    pub fn check_shape(&self, other: &Weights) -> Result<(), NnError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(NnError::ShapeMismatch("parameter sets differ in shape".into()))
        }
    }

    pub fn add_assign(&mut self, other: &Weights) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.data.iter_mut().zip(&b.data).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, k: f64) {
        for t in self.tensors_mut() {
            t.data.iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    /// Round every value to the nearest `f32`.
    /// Redraw the classification head (`cls_w` normal, `cls_b` zero) from
    /// `seed`, leaving everything else untouched.
    pub fn reinit_classifier(&mut self, cfg: &EncoderConfig, seed: u64) {
        let normal = Normal::new(0.0, cfg.init_std).expect("init_std must be finite and >= 0");
        let mut rng = seed::rng_for(seed, "init:cls_w");
        self.cls_w.data.iter_mut().for_each(|v| *v = normal.sample(&mut rng));
        self.cls_b.data.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            t.data.iter_mut().for_each(|x| *x = *x as f32 as f64);
        }
    }
}
