use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::diffusion::CategoricalDistribution;
use crate::linalg::{dot, matvec, matvec_transpose_acc, outer_acc, softmax_in_place};
use crate::selfies::{TokenSequence, CLS_ID, MASK_ID};

use super::{Denoiser, DenoiserError, DenoiserOutput};

/// Shape of the toy attention denoiser. The defaults keep training feasible
/// at desk scale; the output contract is what is under test, not capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToyConfig {
    pub vocab_size: u32,
    pub max_len: usize,
    /// Latent width d.
    pub dim: usize,
    pub layers: usize,
    pub ffn_dim: usize,
    pub mtr_hidden: usize,
    pub descriptor_len: usize,
}

impl ToyConfig {
    pub fn new(vocab_size: u32, max_len: usize) -> ToyConfig {
        ToyConfig {
            vocab_size,
            max_len,
            dim: 64,
            layers: 2,
            ffn_dim: 128,
            mtr_hidden: 32,
            descriptor_len: super::DESCRIPTOR_LEN,
        }
    }

    /// A small instance for tests and gradient checks.
    pub fn tiny(vocab_size: u32, max_len: usize) -> ToyConfig {
        ToyConfig {
            vocab_size,
            max_len,
            dim: 8,
            layers: 2,
            ffn_dim: 12,
            mtr_hidden: 6,
            descriptor_len: 10,
        }
    }
}

/// Byte ranges of each parameter block inside the flat parameter vector.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub embed: (usize, usize),
    pub pos: (usize, usize),
    pub time: (usize, usize),
    /// Per layer: wq, wk, wv, wo, wf1, bf1, wf2, bf2.
    pub layers: Vec<[(usize, usize); 8]>,
    pub w_out: (usize, usize),
    pub b_out: (usize, usize),
    pub mtr_w1: (usize, usize),
    pub mtr_b1: (usize, usize),
    pub mtr_w2: (usize, usize),
    pub mtr_b2: (usize, usize),
    pub total: usize,
}

impl Layout {
    pub fn of(cfg: &ToyConfig) -> Layout {
        let k = cfg.vocab_size as usize;
        let d = cfg.dim;
        let f = cfg.ffn_dim;
        let m = cfg.mtr_hidden;
        let dd = cfg.descriptor_len;
        let mut off = 0usize;
        let mut take = |n: usize| {
            let r = (off, n);
            off += n;
            r
        };
        let embed = take(k * d);
        let pos = take(cfg.max_len * d);
        let time = take(d);
        let mut layers = Vec::with_capacity(cfg.layers);
        for _ in 0..cfg.layers {
            layers.push([
                take(d * d),
                take(d * d),
                take(d * d),
                take(d * d),
                take(f * d),
                take(f),
                take(d * f),
                take(d),
            ]);
        }
        let w_out = take(k * d);
        let b_out = take(k);
        let mtr_w1 = take(m * d);
        let mtr_b1 = take(m);
        let mtr_w2 = take(dd * m);
        let mtr_b2 = take(dd);
        Layout {
            embed,
            pos,
            time,
            layers,
            w_out,
            b_out,
            mtr_w1,
            mtr_b1,
            mtr_w2,
            mtr_b2,
            total: off,
        }
    }
}

fn slice(data: &[f64], r: (usize, usize)) -> &[f64] {
    &data[r.0..r.0 + r.1]
}

fn slice_mut(data: &mut [f64], r: (usize, usize)) -> &mut [f64] {
    &mut data[r.0..r.0 + r.1]
}

/// The descriptor-regression head: a one-hidden-layer tanh MLP read out of
/// the parameter vector.
pub struct MtrHead<'a> {
    w1: &'a [f64],
    b1: &'a [f64],
    w2: &'a [f64],
    b2: &'a [f64],
    dim: usize,
    hidden: usize,
    out: usize,
}

impl<'a> MtrHead<'a> {
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>, DenoiserError> {
        if features.len() != self.dim {
            return Err(DenoiserError::Shape(format!(
                "feature length {} != {}",
                features.len(),
                self.dim
            )));
        }
        let mut hidden = vec![0.0; self.hidden];
        matvec(self.w1, features, &mut hidden, self.hidden, self.dim);
        for (h, b) in hidden.iter_mut().zip(self.b1) {
            *h = (*h + b).tanh();
        }
        let mut out = vec![0.0; self.out];
        matvec(self.w2, &hidden, &mut out, self.out, self.hidden);
        for (o, b) in out.iter_mut().zip(self.b2) {
            *o += b;
        }
        Ok(out)
    }

    pub fn output_len(&self) -> usize {
        self.out
    }
}

/// A small self-attention denoiser over token sequences with additive time
/// conditioning. All parameters live in one flat vector so that finite
/// difference checks and the optimizer can iterate over every scalar.
#[derive(Debug, Clone)]
pub struct ToyDenoiser {
    cfg: ToyConfig,
    layout: Layout,
    data: Vec<f64>,
}

struct LayerCache {
    h_in: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    attn: Vec<f64>,
    ctx: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
}

struct Cache {
    len: usize,
    layers: Vec<LayerCache>,
    h_final: Vec<f64>,
    /// Softmax over non-special logits; special columns are zero.
    probs: Vec<f64>,
}

impl ToyDenoiser {
    pub fn zeros(cfg: ToyConfig) -> ToyDenoiser {
        let layout = Layout::of(&cfg);
        let data = vec![0.0; layout.total];
        ToyDenoiser { cfg, layout, data }
    }

    pub fn seeded(cfg: ToyConfig, seed: u64) -> ToyDenoiser {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut den = ToyDenoiser::zeros(cfg);
        // Box-Muller normal(0, 0.02) initialization.
        for w in den.data.iter_mut() {
            let u1: f64 = 1.0 - rng.gen::<f64>();
            let u2: f64 = rng.gen();
            *w = 0.02 * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
        den
    }

    pub fn config(&self) -> &ToyConfig {
        &self.cfg
    }

    pub fn param_len(&self) -> usize {
        self.data.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.data
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn mtr_head(&self) -> MtrHead<'_> {
        MtrHead {
            w1: slice(&self.data, self.layout.mtr_w1),
            b1: slice(&self.data, self.layout.mtr_b1),
            w2: slice(&self.data, self.layout.mtr_w2),
            b2: slice(&self.data, self.layout.mtr_b2),
            dim: self.cfg.dim,
            hidden: self.cfg.mtr_hidden,
            out: self.cfg.descriptor_len,
        }
    }

    fn forward(&self, xt: &TokenSequence, t: f64) -> Result<Cache, DenoiserError> {
        let len = xt.len();
        if len > self.cfg.max_len {
            return Err(DenoiserError::LengthMismatch {
                got: len,
                want: self.cfg.max_len,
            });
        }
        let d = self.cfg.dim;
        let k = self.cfg.vocab_size as usize;
        let f = self.cfg.ffn_dim;
        let embed = slice(&self.data, self.layout.embed);
        let pos = slice(&self.data, self.layout.pos);
        let time = slice(&self.data, self.layout.time);
        let mut h = vec![0.0; len * d];
        for l in 0..len {
            let tok = xt.get(l) as usize;
            if tok >= k {
                return Err(DenoiserError::Shape(format!("token {tok} >= K {k}")));
            }
            for c in 0..d {
                h[l * d + c] = embed[tok * d + c] + pos[l * d + c] + t * time[c];
            }
        }
        let scale = 1.0 / (d as f64).sqrt();
        let mut layers = Vec::with_capacity(self.cfg.layers);
        for lr in &self.layout.layers {
            let [rwq, rwk, rwv, rwo, rwf1, rbf1, rwf2, rbf2] = *lr;
            let wq = slice(&self.data, rwq);
            let wk = slice(&self.data, rwk);
            let wv = slice(&self.data, rwv);
            let wo = slice(&self.data, rwo);
            let wf1 = slice(&self.data, rwf1);
            let bf1 = slice(&self.data, rbf1);
            let wf2 = slice(&self.data, rwf2);
            let bf2 = slice(&self.data, rbf2);
            let h_in = h.clone();
            let mut q = vec![0.0; len * d];
            let mut kk = vec![0.0; len * d];
            let mut v = vec![0.0; len * d];
            for l in 0..len {
                matvec(wq, &h_in[l * d..(l + 1) * d], &mut q[l * d..(l + 1) * d], d, d);
                matvec(wk, &h_in[l * d..(l + 1) * d], &mut kk[l * d..(l + 1) * d], d, d);
                matvec(wv, &h_in[l * d..(l + 1) * d], &mut v[l * d..(l + 1) * d], d, d);
            }
            let mut attn = vec![0.0; len * len];
            for l in 0..len {
                for m in 0..len {
                    attn[l * len + m] =
                        scale * dot(&q[l * d..(l + 1) * d], &kk[m * d..(m + 1) * d]);
                }
                softmax_in_place(&mut attn[l * len..(l + 1) * len]);
            }
            let mut ctx = vec![0.0; len * d];
            for l in 0..len {
                for m in 0..len {
                    let a = attn[l * len + m];
                    for c in 0..d {
                        ctx[l * d + c] += a * v[m * d + c];
                    }
                }
            }
            let mut r = h_in.clone();
            for l in 0..len {
                let mut wo_ctx = vec![0.0; d];
                matvec(wo, &ctx[l * d..(l + 1) * d], &mut wo_ctx, d, d);
                for c in 0..d {
                    r[l * d + c] += wo_ctx[c];
                }
            }
            let mut z = vec![0.0; len * f];
            let mut h_out = r.clone();
            for l in 0..len {
                let mut u = vec![0.0; f];
                matvec(wf1, &r[l * d..(l + 1) * d], &mut u, f, d);
                for (j, uj) in u.iter_mut().enumerate() {
                    *uj = (*uj + bf1[j]).tanh();
                }
                z[l * f..(l + 1) * f].copy_from_slice(&u);
                let mut back = vec![0.0; d];
                matvec(wf2, &u, &mut back, d, f);
                for c in 0..d {
                    h_out[l * d + c] += back[c] + bf2[c];
                }
            }
            layers.push(LayerCache {
                h_in,
                q,
                k: kk,
                v,
                attn,
                ctx,
                r,
                z,
            });
            h = h_out;
        }
        let w_out = slice(&self.data, self.layout.w_out);
        let b_out = slice(&self.data, self.layout.b_out);
        let mut logits = vec![0.0; len * k];
        let mut probs = vec![0.0; len * k];
        for l in 0..len {
            matvec(w_out, &h[l * d..(l + 1) * d], &mut logits[l * k..(l + 1) * k], k, d);
            for j in 0..k {
                logits[l * k + j] += b_out[j];
            }
            // Softmax over non-special tokens only: the mask logit (and the
            // other special logits) are treated as minus infinity.
            let row = &logits[l * k..(l + 1) * k];
            let mut max = f64::NEG_INFINITY;
            for (j, &x) in row.iter().enumerate() {
                if j as u32 > CLS_ID && x > max {
                    max = x;
                }
            }
            let mut sum = 0.0;
            for j in 0..k {
                if j as u32 > CLS_ID {
                    let e = (row[j] - max).exp();
                    probs[l * k + j] = e;
                    sum += e;
                }
            }
            for j in 0..k {
                probs[l * k + j] /= sum;
            }
        }
        Ok(Cache {
            len,
            layers,
            h_final: h,
            probs,
        })
    }

    /// Final-layer latent of the `[CLS]` position, evaluated on the clean
    /// sequence at the minimum time eps. Deterministic.
    pub fn extract_features(&self, x0: &TokenSequence, eps: f64) -> Result<Vec<f64>, DenoiserError> {
        if x0.is_empty() || x0.get(0) != CLS_ID {
            return Err(DenoiserError::MissingCls);
        }
        let cache = self.forward(x0, eps)?;
        let d = self.cfg.dim;
        Ok(cache.h_final[0..d].to_vec())
    }

    /// Diffusion loss term at fixed (x_t, t) and its parameter gradient.
    pub fn dlm_backward(
        &self,
        x0: &TokenSequence,
        xt: &TokenSequence,
        t: f64,
    ) -> Result<(f64, Vec<f64>), DenoiserError> {
        let cache = self.forward(xt, t)?;
        let k = self.cfg.vocab_size as usize;
        let len = cache.len;
        let inv_t = 1.0 / t;
        let mut loss = 0.0;
        let mut dlogits = vec![0.0; len * k];
        for l in 0..len {
            if xt.get(l) != MASK_ID {
                continue;
            }
            let target = x0.get(l) as usize;
            let p = cache.probs[l * k + target];
            loss += -(p.ln()) * inv_t;
            for j in 0..k {
                if j as u32 > CLS_ID {
                    let indicator = if j == target { 1.0 } else { 0.0 };
                    dlogits[l * k + j] = inv_t * (cache.probs[l * k + j] - indicator);
                }
            }
        }
        let mut grad = vec![0.0; self.data.len()];
        self.backward(xt, t, &cache, Some(&dlogits), None, &mut grad);
        Ok((loss, grad))
    }

    /// Descriptor-regression loss on a clean `[CLS]`-prefixed sequence and
    /// its parameter gradient (head and transformer both).
    pub fn mtr_backward(
        &self,
        x0_with_cls: &TokenSequence,
        target: &[f64],
        eps: f64,
    ) -> Result<(f64, Vec<f64>), DenoiserError> {
        if x0_with_cls.is_empty() || x0_with_cls.get(0) != CLS_ID {
            return Err(DenoiserError::MissingCls);
        }
        if target.len() != self.cfg.descriptor_len {
            return Err(DenoiserError::Shape(format!(
                "target length {} != descriptor length {}",
                target.len(),
                self.cfg.descriptor_len
            )));
        }
        let cache = self.forward(x0_with_cls, eps)?;
        let d = self.cfg.dim;
        let m = self.cfg.mtr_hidden;
        let dd = self.cfg.descriptor_len;
        let feat = &cache.h_final[0..d];
        let w1 = slice(&self.data, self.layout.mtr_w1);
        let b1 = slice(&self.data, self.layout.mtr_b1);
        let w2 = slice(&self.data, self.layout.mtr_w2);
        // Forward through the head.
        let mut hidden = vec![0.0; m];
        matvec(w1, feat, &mut hidden, m, d);
        for (h, b) in hidden.iter_mut().zip(b1) {
            *h = (*h + b).tanh();
        }
        let mut pred = vec![0.0; dd];
        matvec(w2, &hidden, &mut pred, dd, m);
        let b2 = slice(&self.data, self.layout.mtr_b2);
        for (p, b) in pred.iter_mut().zip(b2) {
            *p += b;
        }
        let mut loss = 0.0;
        let mut dpred = vec![0.0; dd];
        for j in 0..dd {
            let diff = pred[j] - target[j];
            loss += diff * diff / dd as f64;
            dpred[j] = 2.0 * diff / dd as f64;
        }
        // Backward through the head.
        let mut grad = vec![0.0; self.data.len()];
        outer_acc(slice_mut(&mut grad, self.layout.mtr_w2), &dpred, &hidden, dd, m);
        for (g, dp) in slice_mut(&mut grad, self.layout.mtr_b2).iter_mut().zip(&dpred) {
            *g += dp;
        }
        let mut dhidden = vec![0.0; m];
        matvec_transpose_acc(w2, &dpred, &mut dhidden, dd, m);
        for j in 0..m {
            dhidden[j] *= 1.0 - hidden[j] * hidden[j];
        }
        outer_acc(slice_mut(&mut grad, self.layout.mtr_w1), &dhidden, feat, m, d);
        for (g, dh) in slice_mut(&mut grad, self.layout.mtr_b1).iter_mut().zip(&dhidden) {
            *g += dh;
        }
        let mut dfeat = vec![0.0; d];
        matvec_transpose_acc(w1, &dhidden, &mut dfeat, m, d);
        // Inject the feature gradient at the CLS row of the final layer.
        let mut dh_final = vec![0.0; cache.len * d];
        dh_final[0..d].copy_from_slice(&dfeat);
        self.backward(x0_with_cls, eps, &cache, None, Some(&dh_final), &mut grad);
        Ok((loss, grad))
    }

    /// Backpropagate logit and final-latent gradients into `grad`.
    fn backward(
        &self,
        xt: &TokenSequence,
        t: f64,
        cache: &Cache,
        dlogits: Option<&[f64]>,
        dh_final: Option<&[f64]>,
        grad: &mut [f64],
    ) {
        let d = self.cfg.dim;
        let k = self.cfg.vocab_size as usize;
        let f = self.cfg.ffn_dim;
        let len = cache.len;
        let scale = 1.0 / (d as f64).sqrt();
        let mut dh = vec![0.0; len * d];
        if let Some(dlogits) = dlogits {
            let w_out = slice(&self.data, self.layout.w_out);
            for l in 0..len {
                let dl = &dlogits[l * k..(l + 1) * k];
                outer_acc(
                    slice_mut(grad, self.layout.w_out),
                    dl,
                    &cache.h_final[l * d..(l + 1) * d],
                    k,
                    d,
                );
                for (g, x) in slice_mut(grad, self.layout.b_out).iter_mut().zip(dl) {
                    *g += x;
                }
                matvec_transpose_acc(w_out, dl, &mut dh[l * d..(l + 1) * d], k, d);
            }
        }
        if let Some(extra) = dh_final {
            for (a, b) in dh.iter_mut().zip(extra) {
                *a += b;
            }
        }
        for (li, lc) in cache.layers.iter().enumerate().rev() {
            let [rwq, rwk, rwv, rwo, rwf1, rbf1, rwf2, rbf2] = self.layout.layers[li];
            let wq = slice(&self.data, rwq);
            let wk = slice(&self.data, rwk);
            let wv = slice(&self.data, rwv);
            let wo = slice(&self.data, rwo);
            let wf1 = slice(&self.data, rwf1);
            let wf2 = slice(&self.data, rwf2);
            // FFN backward: h_out = r + Wf2 z + b2, z = tanh(Wf1 r + b1).
            let mut dr = dh.clone();
            for l in 0..len {
                let dhl = &dh[l * d..(l + 1) * d];
                let zl = &lc.z[l * f..(l + 1) * f];
                outer_acc(slice_mut(grad, rwf2), dhl, zl, d, f);
                for (g, x) in slice_mut(grad, rbf2).iter_mut().zip(dhl) {
                    *g += x;
                }
                let mut dz = vec![0.0; f];
                matvec_transpose_acc(wf2, dhl, &mut dz, d, f);
                for j in 0..f {
                    dz[j] *= 1.0 - zl[j] * zl[j];
                }
                outer_acc(slice_mut(grad, rwf1), &dz, &lc.r[l * d..(l + 1) * d], f, d);
                for (g, x) in slice_mut(grad, rbf1).iter_mut().zip(&dz) {
                    *g += x;
                }
                matvec_transpose_acc(wf1, &dz, &mut dr[l * d..(l + 1) * d], f, d);
            }
            // Attention backward: r = h_in + Wo ctx.
            let mut dh_in = dr.clone();
            let mut dctx = vec![0.0; len * d];
            for l in 0..len {
                let drl = &dr[l * d..(l + 1) * d];
                outer_acc(slice_mut(grad, rwo), drl, &lc.ctx[l * d..(l + 1) * d], d, d);
                matvec_transpose_acc(wo, drl, &mut dctx[l * d..(l + 1) * d], d, d);
            }
            // ctx_l = sum_m attn_lm v_m.
            let mut dattn = vec![0.0; len * len];
            let mut dv = vec![0.0; len * d];
            for l in 0..len {
                for m in 0..len {
                    dattn[l * len + m] =
                        dot(&dctx[l * d..(l + 1) * d], &lc.v[m * d..(m + 1) * d]);
                    let a = lc.attn[l * len + m];
                    for c in 0..d {
                        dv[m * d + c] += a * dctx[l * d + c];
                    }
                }
            }
            // Softmax rows backward.
            let mut dscores = vec![0.0; len * len];
            for l in 0..len {
                let arow = &lc.attn[l * len..(l + 1) * len];
                let darow = &dattn[l * len..(l + 1) * len];
                let inner = dot(arow, darow);
                for m in 0..len {
                    dscores[l * len + m] = arow[m] * (darow[m] - inner);
                }
            }
            // scores_lm = scale * q_l . k_m.
            let mut dq = vec![0.0; len * d];
            let mut dk = vec![0.0; len * d];
            for l in 0..len {
                for m in 0..len {
                    let ds = scale * dscores[l * len + m];
                    for c in 0..d {
                        dq[l * d + c] += ds * lc.k[m * d + c];
                        dk[m * d + c] += ds * lc.q[l * d + c];
                    }
                }
            }
            // Projections q/k/v = W h_in.
            for l in 0..len {
                let h_in_l = &lc.h_in[l * d..(l + 1) * d];
                outer_acc(slice_mut(grad, rwq), &dq[l * d..(l + 1) * d], h_in_l, d, d);
                outer_acc(slice_mut(grad, rwk), &dk[l * d..(l + 1) * d], h_in_l, d, d);
                outer_acc(slice_mut(grad, rwv), &dv[l * d..(l + 1) * d], h_in_l, d, d);
                matvec_transpose_acc(wq, &dq[l * d..(l + 1) * d], &mut dh_in[l * d..(l + 1) * d], d, d);
                matvec_transpose_acc(wk, &dk[l * d..(l + 1) * d], &mut dh_in[l * d..(l + 1) * d], d, d);
                matvec_transpose_acc(wv, &dv[l * d..(l + 1) * d], &mut dh_in[l * d..(l + 1) * d], d, d);
            }
            dh = dh_in;
        }
        // Input embeddings: h0 = embed[token] + pos + t * time.
        let gembed = self.layout.embed;
        let gpos = self.layout.pos;
        let gtime = self.layout.time;
        for l in 0..len {
            let tok = xt.get(l) as usize;
            for c in 0..d {
                let g = dh[l * d + c];
                grad[gembed.0 + tok * d + c] += g;
                grad[gpos.0 + l * d + c] += g;
                grad[gtime.0 + c] += t * g;
            }
        }
    }
}

impl Denoiser for ToyDenoiser {
    fn predict(&self, xt: &TokenSequence, t: f64) -> Result<DenoiserOutput, DenoiserError> {
        let cache = self.forward(xt, t)?;
        let k = self.cfg.vocab_size as usize;
        let mut per_position = Vec::with_capacity(cache.len);
        for l in 0..cache.len {
            let tok = xt.get(l);
            if tok != MASK_ID {
                per_position.push(CategoricalDistribution::point_mass(tok, self.cfg.vocab_size));
            } else {
                let mut probs = cache.probs[l * k..(l + 1) * k].to_vec();
                let sum: f64 = probs.iter().sum();
                for p in probs.iter_mut() {
                    *p /= sum;
                }
                per_position.push(
                    CategoricalDistribution::new(probs).expect("softmax row is normalized"),
                );
            }
        }
        Ok(DenoiserOutput::new(per_position))
    }

    fn vocab_size(&self) -> u32 {
        self.cfg.vocab_size
    }
}
