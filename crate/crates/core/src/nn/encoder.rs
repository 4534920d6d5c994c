use rand::Rng;

use super::tensor::{add_bias, matmul, matmul_a_bt, matmul_at_b_acc, sum_rows_acc};
use super::{EncoderConfig, NnError, Precision, Weights};
use crate::seed;

/// The encoder and its heads.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    pub config: EncoderConfig,
    pub weights: Weights,
}

/// Final hidden states, `seq_len x hidden_dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    pub hidden: Vec<f64>,
    pub seq_len: usize,
    pub hidden_dim: usize,
}

impl EncoderOutput {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.hidden[i * self.hidden_dim..(i + 1) * self.hidden_dim]
    }

    /// Representation of the `[CLS]` token (row 0).
    pub fn h_cls(&self) -> &[f64] {
        self.row(0)
    }
}

/// Borrowed encoder input. `attention_mask[j] == false` hides position `j`
/// as a key from every query.
#[derive(Debug, Clone, Copy)]
pub struct EncoderInput<'a> {
    pub input_ids: &'a [u32],
    pub segment_ids: &'a [u8],
    pub attention_mask: &'a [bool],
}

struct LnCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

struct LayerCache {
    x: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    probs: Vec<f64>,
    ctx: Vec<f64>,
    drop_attn: Option<Vec<f64>>,
    ln1: LnCache,
    x1: Vec<f64>,
    u: Vec<f64>,
    act: Vec<f64>,
    drop_ffn: Option<Vec<f64>>,
    ln2: LnCache,
}

/// Intermediate values of one forward pass, consumed by [`EncoderModel::backward`].
pub struct EncoderTape {
    ids: Vec<u32>,
    segs: Vec<u8>,
    n: usize,
    hidden: Vec<f64>,
    emb_ln: LnCache,
    layers: Vec<LayerCache>,
}

impl EncoderTape {
    pub fn seq_len(&self) -> usize {
        self.n
    }

    /// Final hidden states of the traced pass.
    pub fn hidden(&self) -> &[f64] {
        &self.hidden
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)

fn gelu(u: f64) -> f64 {
    0.5 * u * (1.0 + (GELU_C * (u + 0.044715 * u * u * u)).tanh())
}

fn gelu_grad(u: f64) -> f64 {
    let t = (GELU_C * (u + 0.044715 * u * u * u)).tanh();
    0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * u * u)
}

fn layer_norm(x: &[f64], g: &[f64], b: &[f64], d: usize, eps: f64) -> (Vec<f64>, LnCache) {
    let n = x.len() / d;
    let mut y = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    let mut inv_std = vec![0.0; n];
    for i in 0..n {
        let row = &x[i * d..(i + 1) * d];
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let inv = 1.0 / (var + eps).sqrt();
        inv_std[i] = inv;
        for c in 0..d {
            let h = (row[c] - mean) * inv;
            xhat[i * d + c] = h;
            y[i * d + c] = g[c] * h + b[c];
        }
    }
    (y, LnCache { xhat, inv_std })
}

fn layer_norm_backward(dy: &[f64], cache: &LnCache, g: &[f64], dg: &mut [f64], db: &mut [f64], d: usize) -> Vec<f64> {
    let n = dy.len() / d;
    let mut dx = vec![0.0; dy.len()];
    let mut dxhat = vec![0.0; d];
    for i in 0..n {
        let dyr = &dy[i * d..(i + 1) * d];
        let xh = &cache.xhat[i * d..(i + 1) * d];
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for c in 0..d {
            dg[c] += dyr[c] * xh[c];
            db[c] += dyr[c];
            dxhat[c] = dyr[c] * g[c];
            s1 += dxhat[c];
            s2 += dxhat[c] * xh[c];
        }
        let k = cache.inv_std[i] / d as f64;
        for c in 0..d {
            dx[i * d + c] = k * (d as f64 * dxhat[c] - s1 - xh[c] * s2);
        }
    }
    dx
}

fn dropout_mask<R: Rng>(len: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..len).map(|_| if rng.gen_bool(rate) { 0.0 } else { keep }).collect()
}

impl EncoderModel {
    pub fn new(config: EncoderConfig, seed: u64) -> Result<EncoderModel, NnError> {
        config.validate()?;
        let mut weights = Weights::init(&config, seed);
        if config.precision == Precision::Single {
            weights.round_to_f32();
        }
        Ok(EncoderModel { config, weights })
    }

    fn check_input(&self, input: &EncoderInput) -> Result<(), NnError> {
        let n = input.input_ids.len();
        let cfg = &self.config;
        if n == 0 || n > cfg.max_len {
            return Err(NnError::ShapeMismatch(format!("sequence length {n} outside [1, {}]", cfg.max_len)));
        }
        if input.segment_ids.len() != n || input.attention_mask.len() != n {
            return Err(NnError::ShapeMismatch("ids, segments and mask differ in length".into()));
        }
        if let Some(&id) = input.input_ids.iter().find(|&&id| id as usize >= cfg.vocab_size) {
            return Err(NnError::ShapeMismatch(format!("token id {id} >= vocab_size {}", cfg.vocab_size)));
        }
        if input.segment_ids.iter().any(|&s| s as usize >= cfg.num_segments) {
            return Err(NnError::ShapeMismatch("segment id out of range".into()));
        }
        if !input.attention_mask.iter().any(|&m| m) {
            return Err(NnError::ShapeMismatch("attention mask hides every position".into()));
        }
        Ok(())
    }

    /// Deterministic inference forward pass (no dropout).
    pub fn forward(&self, input_ids: &[u32], segment_ids: &[u8], attention_mask: &[bool]) -> Result<EncoderOutput, NnError> {
        let input = EncoderInput { input_ids, segment_ids, attention_mask };
        Ok(self.forward_traced(&input, None)?.0)
    }

    /// Forward pass that keeps what backward needs. `dropout_seed` enables
    /// dropout (if the config has a nonzero rate).
    pub fn forward_traced(&self, input: &EncoderInput, dropout_seed: Option<u64>) -> Result<(EncoderOutput, EncoderTape), NnError> {
        self.check_input(input)?;
        let cfg = &self.config;
        let w = &self.weights;
        let (n, d, f) = (input.input_ids.len(), cfg.hidden_dim, cfg.ff_dim);
        let (heads, dh) = (cfg.num_heads, cfg.head_dim());
        let scale = 1.0 / (dh as f64).sqrt();
        let mut rng = dropout_seed.filter(|_| cfg.dropout > 0.0).map(seed::rng);

        let mut emb = vec![0.0; n * d];
        for t in 0..n {
            let row = &mut emb[t * d..(t + 1) * d];
            let tok = w.tok_emb.row(input.input_ids[t] as usize);
            let pos = w.pos_emb.row(t);
            let seg = w.seg_emb.row(input.segment_ids[t] as usize);
            for c in 0..d {
                row[c] = tok[c] + pos[c] + seg[c];
            }
        }
        let (mut x, emb_ln) = layer_norm(&emb, &w.emb_ln_g.data, &w.emb_ln_b.data, d, cfg.layer_norm_eps);

        let mut layers = Vec::with_capacity(cfg.num_layers);
        for lw in &w.layers {
            let mut q = matmul(&x, &lw.wq.data, n, d, d);
            add_bias(&mut q, &lw.bq.data);
            let mut k = matmul(&x, &lw.wk.data, n, d, d);
            add_bias(&mut k, &lw.bk.data);
            let mut v = matmul(&x, &lw.wv.data, n, d, d);
            add_bias(&mut v, &lw.bv.data);

            let mut probs = vec![0.0; heads * n * n];
            let mut ctx = vec![0.0; n * d];
            for h in 0..heads {
                let off = h * dh;
                for i in 0..n {
                    let p = &mut probs[(h * n + i) * n..(h * n + i + 1) * n];
                    let qi = &q[i * d + off..i * d + off + dh];
                    let mut max = f64::NEG_INFINITY;
                    for j in 0..n {
                        if input.attention_mask[j] {
                            let kj = &k[j * d + off..j * d + off + dh];
                            p[j] = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale;
                            max = max.max(p[j]);
                        }
                    }
                    let mut sum = 0.0;
                    for j in 0..n {
                        p[j] = if input.attention_mask[j] { (p[j] - max).exp() } else { 0.0 };
                        sum += p[j];
                    }
                    let c = &mut ctx[i * d + off..i * d + off + dh];
                    for j in 0..n {
                        p[j] /= sum;
                        if p[j] != 0.0 {
                            let vj = &v[j * d + off..j * d + off + dh];
                            for (cv, vv) in c.iter_mut().zip(vj) {
                                *cv += p[j] * vv;
                            }
                        }
                    }
                }
            }
            let mut attn = matmul(&ctx, &lw.wo.data, n, d, d);
            add_bias(&mut attn, &lw.bo.data);
            let drop_attn = rng.as_mut().map(|r| dropout_mask(n * d, cfg.dropout, r));
            if let Some(m) = &drop_attn {
                attn.iter_mut().zip(m).for_each(|(a, k)| *a *= k);
            }
            let r1: Vec<f64> = x.iter().zip(&attn).map(|(a, b)| a + b).collect();
            let (x1, ln1) = layer_norm(&r1, &lw.ln1_g.data, &lw.ln1_b.data, d, cfg.layer_norm_eps);

            let mut u = matmul(&x1, &lw.w1.data, n, d, f);
            add_bias(&mut u, &lw.b1.data);
            let act: Vec<f64> = u.iter().map(|&z| gelu(z)).collect();
            let mut ffn = matmul(&act, &lw.w2.data, n, f, d);
            add_bias(&mut ffn, &lw.b2.data);
            let drop_ffn = rng.as_mut().map(|r| dropout_mask(n * d, cfg.dropout, r));
            if let Some(m) = &drop_ffn {
                ffn.iter_mut().zip(m).for_each(|(a, k)| *a *= k);
            }
            let r2: Vec<f64> = x1.iter().zip(&ffn).map(|(a, b)| a + b).collect();
            let (x2, ln2) = layer_norm(&r2, &lw.ln2_g.data, &lw.ln2_b.data, d, cfg.layer_norm_eps);

            layers.push(LayerCache { x, q, k, v, probs, ctx, drop_attn, ln1, x1, u, act, drop_ffn, ln2 });
            x = x2;
        }

        let tape = EncoderTape {
            ids: input.input_ids.to_vec(),
            segs: input.segment_ids.to_vec(),
            n,
            hidden: x.clone(),
            emb_ln,
            layers,
        };
        Ok((EncoderOutput { hidden: x, seq_len: n, hidden_dim: d }, tape))
    }

    /// Back-propagate `d_hidden` (gradient of the loss w.r.t. the final
    /// hidden states) through the encoder, accumulating into `grads`.
    pub fn backward(&self, tape: &EncoderTape, d_hidden: &[f64], grads: &mut Weights) {
        let cfg = &self.config;
        let w = &self.weights;
        let (n, d, f) = (tape.n, cfg.hidden_dim, cfg.ff_dim);
        let (heads, dh) = (cfg.num_heads, cfg.head_dim());
        let scale = 1.0 / (dh as f64).sqrt();
        let mut dx = d_hidden.to_vec();

        for (li, (lw, c)) in w.layers.iter().zip(&tape.layers).enumerate().rev() {
            let g = &mut grads.layers[li];
            let dr2 = layer_norm_backward(&dx, &c.ln2, &lw.ln2_g.data, &mut g.ln2_g.data, &mut g.ln2_b.data, d);
            let mut dx1 = dr2.clone();
            let mut dffn = dr2;
            if let Some(m) = &c.drop_ffn {
                dffn.iter_mut().zip(m).for_each(|(a, k)| *a *= k);
            }
            matmul_at_b_acc(&mut g.w2.data, &c.act, &dffn, n, f, d);
            sum_rows_acc(&mut g.b2.data, &dffn);
            let mut du = matmul_a_bt(&dffn, &lw.w2.data, n, f, d);
            du.iter_mut().zip(&c.u).for_each(|(a, &z)| *a *= gelu_grad(z));
            matmul_at_b_acc(&mut g.w1.data, &c.x1, &du, n, d, f);
            sum_rows_acc(&mut g.b1.data, &du);
            let back = matmul_a_bt(&du, &lw.w1.data, n, d, f);
            dx1.iter_mut().zip(&back).for_each(|(a, b)| *a += b);

            let dr1 = layer_norm_backward(&dx1, &c.ln1, &lw.ln1_g.data, &mut g.ln1_g.data, &mut g.ln1_b.data, d);
            let mut dxl = dr1.clone();
            let mut dattn = dr1;
            if let Some(m) = &c.drop_attn {
                dattn.iter_mut().zip(m).for_each(|(a, k)| *a *= k);
            }
            matmul_at_b_acc(&mut g.wo.data, &c.ctx, &dattn, n, d, d);
            sum_rows_acc(&mut g.bo.data, &dattn);
            let dctx = matmul_a_bt(&dattn, &lw.wo.data, n, d, d);

            let mut dq = vec![0.0; n * d];
            let mut dk = vec![0.0; n * d];
            let mut dv = vec![0.0; n * d];
            let mut dp = vec![0.0; n];
            for h in 0..heads {
                let off = h * dh;
                for i in 0..n {
                    let p = &c.probs[(h * n + i) * n..(h * n + i + 1) * n];
                    let dci = &dctx[i * d + off..i * d + off + dh];
                    let mut s = 0.0;
                    for j in 0..n {
                        if p[j] == 0.0 {
                            dp[j] = 0.0;
                            continue;
                        }
                        let vj = &c.v[j * d + off..j * d + off + dh];
                        dp[j] = dci.iter().zip(vj).map(|(a, b)| a * b).sum();
                        s += dp[j] * p[j];
                        for (dvv, dcv) in dv[j * d + off..j * d + off + dh].iter_mut().zip(dci) {
                            *dvv += p[j] * dcv;
                        }
                    }
                    for j in 0..n {
                        if p[j] == 0.0 {
                            continue;
                        }
                        let ds = p[j] * (dp[j] - s) * scale;
                        for t in 0..dh {
                            dq[i * d + off + t] += ds * c.k[j * d + off + t];
                            dk[j * d + off + t] += ds * c.q[i * d + off + t];
                        }
                    }
                }
            }
            for (dproj, wt, gw, gb) in [
                (&dq, &lw.wq, &mut g.wq, &mut g.bq),
                (&dk, &lw.wk, &mut g.wk, &mut g.bk),
                (&dv, &lw.wv, &mut g.wv, &mut g.bv),
            ] {
                matmul_at_b_acc(&mut gw.data, &c.x, dproj, n, d, d);
                sum_rows_acc(&mut gb.data, dproj);
                let back = matmul_a_bt(dproj, &wt.data, n, d, d);
                dxl.iter_mut().zip(&back).for_each(|(a, b)| *a += b);
            }
            dx = dxl;
        }

        let demb = layer_norm_backward(&dx, &tape.emb_ln, &w.emb_ln_g.data, &mut grads.emb_ln_g.data, &mut grads.emb_ln_b.data, d);
        for t in 0..n {
            let row = &demb[t * d..(t + 1) * d];
            grads.tok_emb.row_mut(tape.ids[t] as usize).iter_mut().zip(row).for_each(|(a, b)| *a += b);
            grads.pos_emb.row_mut(t).iter_mut().zip(row).for_each(|(a, b)| *a += b);
            grads.seg_emb.row_mut(tape.segs[t] as usize).iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny() -> EncoderModel {
        let cfg = EncoderConfig { vocab_size: 30, max_len: 12, hidden_dim: 8, num_heads: 2, ff_dim: 16, ..Default::default() };
        EncoderModel::new(cfg, 11).unwrap()
    }

    #[test]
    fn output_shape_and_cls_row() {
        let m = tiny();
        let out = m.forward(&[2, 7, 8, 3, 9, 3], &[0, 0, 0, 0, 1, 1], &[true; 6]).unwrap();
        assert_eq!(out.hidden.len(), 6 * 8);
        assert_eq!(out.h_cls(), &out.hidden[..8]);
    }

    #[test]
    fn padding_does_not_leak() {
        let m = tiny();
        let a = m.forward(&[2, 7, 8, 3, 9, 3], &[0, 0, 0, 0, 1, 1], &[true; 6]).unwrap();
        let mut mask = vec![true; 6];
        mask.extend([false; 4]);
        let b = m.forward(&[2, 7, 8, 3, 9, 3, 0, 0, 0, 0], &[0, 0, 0, 0, 1, 1, 1, 1, 1, 1], &mask).unwrap();
        for (x, y) in a.hidden.iter().zip(&b.hidden[..48]) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn input_validation() {
        let m = tiny();
        assert!(m.forward(&[2, 99], &[0, 0], &[true, true]).is_err());
        assert!(m.forward(&[2, 5], &[0], &[true, true]).is_err());
        assert!(m.forward(&[], &[], &[]).is_err());
        assert!(m.forward(&[2; 13], &[0; 13], &[true; 13]).is_err());
        assert!(m.forward(&[2, 5], &[0, 2], &[true, true]).is_err());
        assert!(m.forward(&[2, 5], &[0, 0], &[false, false]).is_err());
    }

    #[test]
    fn gelu_derivative_matches_difference() {
        for &u in &[-3.0, -0.5, 0.0, 0.7, 2.5] {
            let h = 1e-6;
            let fd = (gelu(u + h) - gelu(u - h)) / (2.0 * h);
            assert!((fd - gelu_grad(u)).abs() < 1e-8);
        }
    }
}
