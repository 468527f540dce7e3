//! Pre-norm transformer encoder with a fast (action) and a slow (next
//! observation) head, plus hand-written backpropagation.
//!
//! ```text
//! x0 = tok_emb[tokens] + sre
//! per layer:  x += Wo·MHA(LN1(x));  x += W2·gelu(W1·LN2(x))
//! h  = LNf(x)
//! slow logits = h·Ws + bs          (every position)
//! fast logits = h[255]·Wf + bf     (last position only)
//! ```
//!
//! Attention is bidirectional; there is no positional embedding besides the
//! spatial encoding.

use mapf_core::tokenizer::{SreMeta, Tokens, SEQ_LEN};
use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};

use crate::error::{NeuralError, Result};
use crate::params::{Buffer, LayerIds, ModelParams, TensorId, SRE_IN};
use crate::sre::{encode_features, sre_features};

/// Position whose hidden state feeds the fast head.
pub const FAST_POS: usize = SEQ_LEN - 1;
const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub action_logits: Array1<f64>,
    pub slow_logits: Array2<f64>,
}

struct LnCache {
    xhat: Array2<f64>,
    rstd: Array1<f64>,
}

struct LayerCache {
    ln1: LnCache,
    h1: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    probs: Vec<Array2<f64>>,
    attn: Array2<f64>,
    ln2: LnCache,
    h2: Array2<f64>,
    u: Array2<f64>,
    g: Array2<f64>,
}

/// Activations kept for the backward pass.
pub struct ForwardCache {
    tokens: Tokens,
    features: Vec<Option<[f64; SRE_IN]>>,
    layers: Vec<LayerCache>,
    lnf: LnCache,
    hf: Array2<f64>,
}

fn linear(x: &Array2<f64>, w: ArrayView2<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    let mut y = x.dot(&w);
    y += &b;
    y
}

fn layer_norm(x: &Array2<f64>, g: ArrayView1<f64>, b: ArrayView1<f64>) -> (Array2<f64>, LnCache) {
    let d = x.ncols() as f64;
    let mut xhat = x.clone();
    let mut rstd = Array1::zeros(x.nrows());
    for (mut row, r) in xhat.rows_mut().into_iter().zip(rstd.iter_mut()) {
        let mean = row.sum() / d;
        row -= mean;
        let var = row.iter().map(|v| v * v).sum::<f64>() / d;
        *r = 1.0 / (var + LN_EPS).sqrt();
        row *= *r;
    }
    let mut y = &xhat * &g;
    y += &b;
    (y, LnCache { xhat, rstd })
}

/// Returns `dx` and accumulates gain/bias gradients.
fn layer_norm_backward(dy: &Array2<f64>, c: &LnCache, g: ArrayView1<f64>, grads: &mut Buffer, p: &ModelParams, gid: TensorId, bid: TensorId) -> Array2<f64> {
    let l = &p.layout;
    {
        let mut gg = grads.vec_mut(l, gid);
        gg += &(dy * &c.xhat).sum_axis(Axis(0));
    }
    {
        let mut gb = grads.vec_mut(l, bid);
        gb += &dy.sum_axis(Axis(0));
    }
    let d = dy.ncols() as f64;
    let mut dx = dy * &g;
    for ((mut row, xh), r) in dx.rows_mut().into_iter().zip(c.xhat.rows()).zip(c.rstd.iter()) {
        let mean = row.sum() / d;
        let mean_x = row.iter().zip(xh.iter()).map(|(a, b)| a * b).sum::<f64>() / d;
        Zip::from(&mut row).and(&xh).for_each(|v, &x| *v = r * (*v - mean - x * mean_x));
    }
    dx
}

fn gelu(u: f64) -> f64 {
    0.5 * u * (1.0 + (GELU_C * (u + GELU_A * u * u * u)).tanh())
}

fn gelu_grad(u: f64) -> f64 {
    let t = (GELU_C * (u + GELU_A * u * u * u)).tanh();
    0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * u * u)
}

fn softmax_rows(s: &mut Array2<f64>) {
    for mut row in s.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let z = row.sum();
        row /= z;
    }
}

/// Adds `x^T · dy` to a weight gradient and the column sums of `dy` to its
/// bias, then returns `dy · W^T`.
fn linear_backward(x: &Array2<f64>, dy: &Array2<f64>, p: &ModelParams, grads: &mut Buffer, wid: TensorId, bid: TensorId) -> Array2<f64> {
    let l = &p.layout;
    general_mat_mul(1.0, &x.t(), dy, 1.0, &mut grads.mat_mut(l, wid));
    {
        let mut gb = grads.vec_mut(l, bid);
        gb += &dy.sum_axis(Axis(0));
    }
    dy.dot(&p.mat(wid).t())
}

fn check_finite(a: &Array2<f64>, what: &'static str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NeuralError::NonFiniteActivation(what))
    }
}

fn embed(params: &ModelParams, tokens: &Tokens, features: &[Option<[f64; SRE_IN]>]) -> Result<Array2<f64>> {
    let l = &params.layout;
    let vocab = params.config.vocab_size;
    if let Some(bad) = tokens.iter().find(|&&t| t as usize >= vocab) {
        return Err(NeuralError::ShapeMismatch(format!("token id {bad} outside vocabulary of {vocab}")));
    }
    let emb = params.mat(l.tok_emb);
    let mut x = if params.config.use_sre {
        let b = params.vec(l.sre_b);
        encode_features(features, params.mat(l.sre_w), b.as_slice().expect("contiguous"))?
    } else {
        Array2::zeros((SEQ_LEN, params.config.d_model))
    };
    for (mut row, &t) in x.rows_mut().into_iter().zip(tokens.iter()) {
        row += &emb.row(t as usize);
    }
    Ok(x)
}

fn attention(params: &ModelParams, ids: &LayerIds, h: &Array2<f64>) -> (Array2<f64>, Array2<f64>, Array2<f64>, Vec<Array2<f64>>, Array2<f64>) {
    let cfg = &params.config;
    let q = linear(h, params.mat(ids.wq), params.vec(ids.bq));
    let k = linear(h, params.mat(ids.wk), params.vec(ids.bk));
    let v = linear(h, params.mat(ids.wv), params.vec(ids.bv));
    let dh = cfg.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut attn = Array2::zeros(h.raw_dim());
    let mut probs = Vec::with_capacity(cfg.n_heads);
    for head in 0..cfg.n_heads {
        let cols = s![.., head * dh..(head + 1) * dh];
        let mut scores = q.slice(cols).dot(&k.slice(cols).t());
        scores *= scale;
        softmax_rows(&mut scores);
        attn.slice_mut(cols).assign(&scores.dot(&v.slice(cols)));
        probs.push(scores);
    }
    (q, k, v, probs, attn)
}

fn run(params: &ModelParams, tokens: &Tokens, meta: &SreMeta) -> Result<(ModelOutput, ForwardCache)> {
    let l = &params.layout;
    let features = sre_features(meta);
    let mut x = embed(params, tokens, &features)?;
    let mut layers = Vec::with_capacity(l.layers.len());
    for ids in &l.layers {
        let (h1, ln1) = layer_norm(&x, params.vec(ids.ln1_g), params.vec(ids.ln1_b));
        let (q, k, v, probs, attn) = attention(params, ids, &h1);
        x += &linear(&attn, params.mat(ids.wo), params.vec(ids.bo));
        let (h2, ln2) = layer_norm(&x, params.vec(ids.ln2_g), params.vec(ids.ln2_b));
        let u = linear(&h2, params.mat(ids.w1), params.vec(ids.b1));
        let g = u.mapv(gelu);
        x += &linear(&g, params.mat(ids.w2), params.vec(ids.b2));
        layers.push(LayerCache { ln1, h1, q, k, v, probs, attn, ln2, h2, u, g });
    }
    check_finite(&x, "encoder")?;
    let (hf, lnf) = layer_norm(&x, params.vec(l.lnf_g), params.vec(l.lnf_b));
    let slow_logits = linear(&hf, params.mat(l.slow_w), params.vec(l.slow_b));
    let mut action_logits = hf.row(FAST_POS).dot(&params.mat(l.fast_w));
    action_logits += &params.vec(l.fast_b);
    check_finite(&slow_logits, "slow head")?;
    if !action_logits.iter().all(|v| v.is_finite()) {
        return Err(NeuralError::NonFiniteActivation("fast head"));
    }
    let cache = ForwardCache { tokens: *tokens, features, layers, lnf, hf };
    Ok((ModelOutput { action_logits, slow_logits }, cache))
}

/// Action logits (5) and per-position vocabulary logits (256 × vocab).
pub fn forward(params: &ModelParams, tokens: &Tokens, meta: &SreMeta) -> Result<ModelOutput> {
    run(params, tokens, meta).map(|(out, _)| out)
}

/// Fast-head logits only. The last layer is evaluated for the fast-head
/// position alone, which roughly halves the cost of a two-layer model.
pub fn forward_action(params: &ModelParams, tokens: &Tokens, meta: &SreMeta) -> Result<Array1<f64>> {
    let l = &params.layout;
    let Some((last, rest)) = l.layers.split_last() else {
        return forward(params, tokens, meta).map(|o| o.action_logits);
    };
    let mut x = embed(params, tokens, &sre_features(meta))?;
    for ids in rest {
        let (h1, _) = layer_norm(&x, params.vec(ids.ln1_g), params.vec(ids.ln1_b));
        let (_, _, _, _, attn) = attention(params, ids, &h1);
        x += &linear(&attn, params.mat(ids.wo), params.vec(ids.bo));
        let (h2, _) = layer_norm(&x, params.vec(ids.ln2_g), params.vec(ids.ln2_b));
        let g = linear(&h2, params.mat(ids.w1), params.vec(ids.b1)).mapv(gelu);
        x += &linear(&g, params.mat(ids.w2), params.vec(ids.b2));
    }

    let cfg = &params.config;
    let (h1, _) = layer_norm(&x, params.vec(last.ln1_g), params.vec(last.ln1_b));
    let k = linear(&h1, params.mat(last.wk), params.vec(last.bk));
    let v = linear(&h1, params.mat(last.wv), params.vec(last.bv));
    let q = linear(&h1.slice(s![FAST_POS..FAST_POS + 1, ..]).to_owned(), params.mat(last.wq), params.vec(last.bq));
    let dh = cfg.head_dim();
    let scale = 1.0 / (dh as f64).sqrt();
    let mut attn = Array2::zeros((1, cfg.d_model));
    for head in 0..cfg.n_heads {
        let cols = s![.., head * dh..(head + 1) * dh];
        let mut scores = q.slice(cols).dot(&k.slice(cols).t());
        scores *= scale;
        softmax_rows(&mut scores);
        attn.slice_mut(cols).assign(&scores.dot(&v.slice(cols)));
    }
    let mut xr = x.slice(s![FAST_POS..FAST_POS + 1, ..]).to_owned();
    xr += &linear(&attn, params.mat(last.wo), params.vec(last.bo));
    let (h2, _) = layer_norm(&xr, params.vec(last.ln2_g), params.vec(last.ln2_b));
    let g = linear(&h2, params.mat(last.w1), params.vec(last.b1)).mapv(gelu);
    xr += &linear(&g, params.mat(last.w2), params.vec(last.b2));
    check_finite(&xr, "encoder")?;
    let (hf, _) = layer_norm(&xr, params.vec(l.lnf_g), params.vec(l.lnf_b));
    let mut action_logits = hf.row(0).dot(&params.mat(l.fast_w));
    action_logits += &params.vec(l.fast_b);
    if !action_logits.iter().all(|v| v.is_finite()) {
        return Err(NeuralError::NonFiniteActivation("fast head"));
    }
    Ok(action_logits)
}

pub fn forward_with_cache(params: &ModelParams, tokens: &Tokens, meta: &SreMeta) -> Result<(ModelOutput, ForwardCache)> {
    run(params, tokens, meta)
}

/// Accumulates parameter gradients into `grads` given the loss gradients with
/// respect to both heads' logits.
pub fn backward(params: &ModelParams, cache: &ForwardCache, d_action: ArrayView1<f64>, d_slow: &Array2<f64>, grads: &mut Buffer) {
    let l = &params.layout;
    let cfg = &params.config;

    // Heads.
    let mut dh = linear_backward(&cache.hf, d_slow, params, grads, l.slow_w, l.slow_b);
    {
        let hrow = cache.hf.row(FAST_POS);
        let mut gw = grads.mat_mut(l, l.fast_w);
        for (i, &hv) in hrow.iter().enumerate() {
            gw.row_mut(i).scaled_add(hv, &d_action);
        }
    }
    {
        let mut gb = grads.vec_mut(l, l.fast_b);
        gb += &d_action;
    }
    let dfast_h = params.mat(l.fast_w).dot(&d_action);
    {
        let mut row = dh.row_mut(FAST_POS);
        row += &dfast_h;
    }
    let mut dx = layer_norm_backward(&dh, &cache.lnf, params.vec(l.lnf_g), grads, params, l.lnf_g, l.lnf_b);

    let dh_dim = cfg.head_dim();
    let scale = 1.0 / (dh_dim as f64).sqrt();
    for (ids, c) in l.layers.iter().zip(&cache.layers).rev() {
        // Feed-forward block.
        let mut dg = linear_backward(&c.g, &dx, params, grads, ids.w2, ids.b2);
        Zip::from(&mut dg).and(&c.u).for_each(|d, &u| *d *= gelu_grad(u));
        let dh2 = linear_backward(&c.h2, &dg, params, grads, ids.w1, ids.b1);
        dx += &layer_norm_backward(&dh2, &c.ln2, params.vec(ids.ln2_g), grads, params, ids.ln2_g, ids.ln2_b);

        // Attention block.
        let dattn = linear_backward(&c.attn, &dx, params, grads, ids.wo, ids.bo);
        let mut dq = Array2::zeros(c.q.raw_dim());
        let mut dk = Array2::zeros(c.k.raw_dim());
        let mut dv = Array2::zeros(c.v.raw_dim());
        for (head, p) in c.probs.iter().enumerate() {
            let cols = s![.., head * dh_dim..(head + 1) * dh_dim];
            let dout = dattn.slice(cols);
            let mut ds = dout.dot(&c.v.slice(cols).t());
            dv.slice_mut(cols).assign(&p.t().dot(&dout));
            for (mut drow, prow) in ds.rows_mut().into_iter().zip(p.rows()) {
                let dot = drow.iter().zip(prow.iter()).map(|(a, b)| a * b).sum::<f64>();
                Zip::from(&mut drow).and(&prow).for_each(|d, &pv| *d = pv * (*d - dot) * scale);
            }
            dq.slice_mut(cols).assign(&ds.dot(&c.k.slice(cols)));
            dk.slice_mut(cols).assign(&ds.t().dot(&c.q.slice(cols)));
        }
        let mut dh1 = linear_backward(&c.h1, &dq, params, grads, ids.wq, ids.bq);
        dh1 += &linear_backward(&c.h1, &dk, params, grads, ids.wk, ids.bk);
        dh1 += &linear_backward(&c.h1, &dv, params, grads, ids.wv, ids.bv);
        dx += &layer_norm_backward(&dh1, &c.ln1, params.vec(ids.ln1_g), grads, params, ids.ln1_g, ids.ln1_b);
    }

    // Embeddings.
    {
        let mut ge = grads.mat_mut(l, l.tok_emb);
        for (&t, row) in cache.tokens.iter().zip(dx.rows()) {
            let mut g = ge.row_mut(t as usize);
            g += &row;
        }
    }
    if cfg.use_sre {
        let d = cfg.d_model;
        let mut gw = vec![0.0; SRE_IN * d];
        let mut gb = vec![0.0; d];
        for (f, row) in cache.features.iter().zip(dx.rows()) {
            if let Some(u) = f {
                for (j, &g) in row.iter().enumerate() {
                    gb[j] += g;
                    for i in 0..SRE_IN {
                        gw[i * d + j] += u[i] * g;
                    }
                }
            }
        }
        for (a, b) in grads.data[l.range(l.sre_w)].iter_mut().zip(&gw) {
            *a += b;
        }
        for (a, b) in grads.data[l.range(l.sre_b)].iter_mut().zip(&gb) {
            *a += b;
        }
    }
}
