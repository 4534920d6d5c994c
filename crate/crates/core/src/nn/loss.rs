use super::tensor::{dot, softmax, softmax_in_place};
use super::{EncoderInput, EncoderModel, EncoderOutput, EncoderTape, NnError, Weights};
use crate::exec::Exec;
use crate::lmdata::MaskedPairExample;
use crate::seed;
use crate::text::Polarity;

/// Probabilities are floored here before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Cross-entropy `-ln p` with the probability floor applied.
pub fn cross_entropy(p: f64) -> f64 {
    -p.max(PROB_FLOOR).ln()
}

/// `softmax(W h + b)` over (positive, negative, neutral).
pub fn cls_probs(weights: &Weights, h: &[f64]) -> [f64; 3] {
    let logits: Vec<f64> = (0..3).map(|c| dot(weights.cls_w.row(c), h) + weights.cls_b.data[c]).collect();
    let p = softmax(&logits);
    [p[0], p[1], p[2]]
}

pub fn classify_atsc(model: &EncoderModel, output: &EncoderOutput) -> [f64; 3] {
    cls_probs(&model.weights, output.h_cls())
}

pub fn loss_atsc(p: &[f64; 3], label: Polarity) -> f64 {
    cross_entropy(p[label.index()])
}

/// Arg-max class; ties go to the lowest index.
pub fn predict(p: &[f64; 3]) -> Polarity {
    let mut best = 0;
    for c in 1..3 {
        if p[c] > p[best] {
            best = c;
        }
    }
    Polarity::from_index(best).unwrap()
}

fn nsp_probs(weights: &Weights, h: &[f64]) -> [f64; 2] {
    let logits: Vec<f64> = (0..2).map(|c| dot(weights.nsp_w.row(c), h) + weights.nsp_b.data[c]).collect();
    let p = softmax(&logits);
    [p[0], p[1]]
}

fn mlm_probs(weights: &Weights, h: &[f64]) -> Vec<f64> {
    let v = weights.mlm_bias.len();
    let mut logits: Vec<f64> = (0..v).map(|t| dot(weights.tok_emb.row(t), h) + weights.mlm_bias.data[t]).collect();
    softmax_in_place(&mut logits);
    logits
}

/// A classification input: `[CLS] sentence [SEP] target [SEP]` ids and the
/// gold label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPair {
    pub input_ids: Vec<u32>,
    pub segment_ids: Vec<u8>,
    pub label: Polarity,
}

enum HeadTerm {
    Mlm { pos: usize, probs: Vec<f64>, label: usize, weight: f64 },
    Nsp { probs: [f64; 2], label: usize, weight: f64 },
    Cls { probs: [f64; 3], label: usize, weight: f64 },
}

struct ItemGraph {
    tape: EncoderTape,
    terms: Vec<HeadTerm>,
}

/// Loss components of a graph (before scaling).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub mlm: f64,
    pub nsp: f64,
    pub cls: f64,
}

/// A batch loss together with everything needed to differentiate it once.
pub struct LossGraph {
    items: Vec<ItemGraph>,
    parts: LossParts,
    scale: f64,
    exec: Exec,
    consumed: bool,
}

const BACKWARD_CHUNKS: usize = 8;

impl LossGraph {
    /// Mean MLM cross-entropy over all masked positions in the batch plus
    /// mean NSP cross-entropy, unit weights.
    pub fn lm(model: &EncoderModel, batch: &[MaskedPairExample], exec: Exec, dropout_seed: Option<u64>) -> Result<LossGraph, NnError> {
        if batch.is_empty() {
            return Err(NnError::EmptyBatch);
        }
        let masked: usize = batch.iter().map(|e| e.mlm_positions.len()).sum();
        if masked == 0 {
            return Err(NnError::NoMaskedPositions);
        }
        let w_mlm = 1.0 / masked as f64;
        let w_nsp = 1.0 / batch.len() as f64;
        let items = exec.map_range(batch.len(), |i| -> Result<ItemGraph, NnError> {
            let ex = &batch[i];
            let n = ex.real_len();
            let mask = vec![true; n];
            let input = EncoderInput { input_ids: &ex.input_ids[..n], segment_ids: &ex.segment_ids[..n], attention_mask: &mask };
            let (out, tape) = model.forward_traced(&input, dropout_seed.map(|s| seed::shard(s, i as u64)))?;
            let mut terms = Vec::with_capacity(ex.mlm_positions.len() + 1);
            for (&pos, &label) in ex.mlm_positions.iter().zip(&ex.mlm_labels) {
                let probs = mlm_probs(&model.weights, out.row(pos as usize));
                terms.push(HeadTerm::Mlm { pos: pos as usize, probs, label: label as usize, weight: w_mlm });
            }
            let probs = nsp_probs(&model.weights, out.h_cls());
            terms.push(HeadTerm::Nsp { probs, label: usize::from(ex.nsp_label), weight: w_nsp });
            Ok(ItemGraph { tape, terms })
        });
        Self::finish(items, exec)
    }

    /// Mean classification cross-entropy.
    pub fn atsc(model: &EncoderModel, batch: &[LabeledPair], exec: Exec, dropout_seed: Option<u64>) -> Result<LossGraph, NnError> {
        if batch.is_empty() {
            return Err(NnError::EmptyBatch);
        }
        let weight = 1.0 / batch.len() as f64;
        let items = exec.map_range(batch.len(), |i| -> Result<ItemGraph, NnError> {
            let ex = &batch[i];
            let mask = vec![true; ex.input_ids.len()];
            let input = EncoderInput { input_ids: &ex.input_ids, segment_ids: &ex.segment_ids, attention_mask: &mask };
            let (out, tape) = model.forward_traced(&input, dropout_seed.map(|s| seed::shard(s, i as u64)))?;
            let probs = cls_probs(&model.weights, out.h_cls());
            Ok(ItemGraph { tape, terms: vec![HeadTerm::Cls { probs, label: ex.label.index(), weight }] })
        });
        Self::finish(items, exec)
    }

    fn finish(items: Vec<Result<ItemGraph, NnError>>, exec: Exec) -> Result<LossGraph, NnError> {
        let items: Vec<ItemGraph> = items.into_iter().collect::<Result<_, _>>()?;
        let mut parts = LossParts::default();
        for item in &items {
            for term in &item.terms {
                match term {
                    HeadTerm::Mlm { probs, label, weight, .. } => parts.mlm += weight * cross_entropy(probs[*label]),
                    HeadTerm::Nsp { probs, label, weight } => parts.nsp += weight * cross_entropy(probs[*label]),
                    HeadTerm::Cls { probs, label, weight } => parts.cls += weight * cross_entropy(probs[*label]),
                }
            }
        }
        Ok(LossGraph { items, parts, scale: 1.0, exec, consumed: false })
    }

    pub fn value(&self) -> f64 {
        self.scale * (self.parts.mlm + self.parts.nsp + self.parts.cls)
    }

    pub fn parts(&self) -> LossParts {
        self.parts
    }

    /// Multiply the loss (and hence every gradient) by `k`.
    pub fn scale(&mut self, k: f64) {
        self.scale *= k;
    }

    /// Gradients of [`LossGraph::value`] w.r.t. every parameter. Items are
    /// split into a fixed number of chunks whose partial sums are added in
    /// order, so the result is identical in parallel and sequential mode.
    pub fn backward(&mut self, model: &EncoderModel) -> Result<Weights, NnError> {
        if self.consumed {
            return Err(NnError::GraphConsumed);
        }
        self.consumed = true;
        let items = std::mem::take(&mut self.items);
        let chunk = items.len().div_ceil(BACKWARD_CHUNKS).max(1);
        let chunks: Vec<&[ItemGraph]> = items.chunks(chunk).collect();
        let partials = self.exec.map(&chunks, |group| {
            let mut g = Weights::zeros(&model.config);
            for item in group.iter() {
                item_backward(model, item, &mut g);
            }
            g
        });
        let mut total = Weights::zeros(&model.config);
        for p in &partials {
            total.add_assign(p);
        }
        if self.scale != 1.0 {
            total.scale(self.scale);
        }
        Ok(total)
    }
}

fn item_backward(model: &EncoderModel, item: &ItemGraph, g: &mut Weights) {
    let w = &model.weights;
    let d = model.config.hidden_dim;
    let n = item.tape.seq_len();
    let mut dh = vec![0.0; n * d];
    let hidden = item.tape.hidden();
    for term in &item.terms {
        match term {
            HeadTerm::Mlm { pos, probs, label, weight } => {
                if probs[*label] < PROB_FLOOR {
                    continue;
                }
                let h = &hidden[pos * d..(pos + 1) * d];
                let dhr = &mut dh[pos * d..(pos + 1) * d];
                for (t, &p) in probs.iter().enumerate() {
                    let dl = weight * (p - if t == *label { 1.0 } else { 0.0 });
                    if dl == 0.0 {
                        continue;
                    }
                    g.mlm_bias.data[t] += dl;
                    let e = w.tok_emb.row(t);
                    let ge = g.tok_emb.row_mut(t);
                    for c in 0..d {
                        ge[c] += dl * h[c];
                        dhr[c] += dl * e[c];
                    }
                }
            }
            HeadTerm::Nsp { probs, label, weight } => {
                if probs[*label] >= PROB_FLOOR {
                    head_backward(&hidden[..d], probs, *label, *weight, &w.nsp_w.data, &mut g.nsp_w.data, &mut g.nsp_b.data, &mut dh[..d]);
                }
            }
            HeadTerm::Cls { probs, label, weight } => {
                if probs[*label] >= PROB_FLOOR {
                    head_backward(&hidden[..d], probs, *label, *weight, &w.cls_w.data, &mut g.cls_w.data, &mut g.cls_b.data, &mut dh[..d]);
                }
            }
        }
    }
    model.backward(&item.tape, &dh, g);
}

#[allow(clippy::too_many_arguments)]
fn head_backward(h: &[f64], probs: &[f64], label: usize, weight: f64, wt: &[f64], gw: &mut [f64], gb: &mut [f64], dh: &mut [f64]) {
    let d = h.len();
    for (c, &p) in probs.iter().enumerate() {
        let dl = weight * (p - if c == label { 1.0 } else { 0.0 });
        gb[c] += dl;
        for k in 0..d {
            gw[c * d + k] += dl * h[k];
            dh[k] += dl * wt[c * d + k];
        }
    }
}

/// Value of the LM objective on a batch (no graph kept).
pub fn loss_lm(model: &EncoderModel, batch: &[MaskedPairExample], exec: Exec) -> Result<LossParts, NnError> {
    Ok(LossGraph::lm(model, batch, exec, None)?.parts())
}
