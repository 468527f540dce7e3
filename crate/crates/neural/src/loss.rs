//! Weighted cross-entropy objectives.
//!
//! * fast loss: mean over the batch of the action cross-entropy;
//! * slow loss: `Σ_b Σ_k w_bk ℓ_bk / Σ_b Σ_k w_bk`, with `w` from
//!   [`position_weight`](crate::example::position_weight);
//! * total loss: `fast + 0.5 · slow`.

use mapf_core::tokenizer::{Tokens, SEQ_LEN};
use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{NeuralError, Result};
use crate::example::{position_weights, Example};
use crate::model::{backward, forward, forward_with_cache};
use crate::params::{Buffer, ModelParams};

pub const SLOW_LOSS_WEIGHT: f64 = 0.5;

pub fn softmax(logits: ArrayView1<f64>) -> Array1<f64> {
    let m = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut p = logits.mapv(|v| (v - m).exp());
    let z = p.sum();
    p /= z;
    p
}

/// `-ln pred[label]`.
pub fn token_loss(pred: ArrayView1<f64>, label: usize) -> f64 {
    -pred[label].ln()
}

/// Cross-entropy computed from logits via log-sum-exp.
pub fn logit_loss(logits: ArrayView1<f64>, label: usize) -> f64 {
    let m = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lse = m + logits.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    lse - logits[label]
}

pub fn combine(fast: f64, slow: f64) -> f64 {
    fast + SLOW_LOSS_WEIGHT * slow
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub fast: f64,
    pub slow: f64,
    pub total: f64,
}

/// Weighted slow-loss numerator and weight sum for one sample's logits.
pub fn slow_terms(logits: &Array2<f64>, target: &Tokens, weights: &[f64; SEQ_LEN]) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        if w != 0.0 {
            num += w * logit_loss(logits.row(k), target[k] as usize);
            den += w;
        }
    }
    (num, den)
}

/// Slow loss over per-sample logits.
pub fn slow_loss_from_logits(logits: &[Array2<f64>], batch: &[Example]) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (l, ex) in logits.iter().zip(batch) {
        let (n, d) = slow_terms(l, &ex.target, &position_weights(&ex.weights));
        num += n;
        den += d;
    }
    if den == 0.0 {
        return Err(NeuralError::ZeroWeightSum);
    }
    Ok(num / den)
}

/// Fast loss over per-sample action logits.
pub fn fast_loss_from_logits(logits: &[Array1<f64>], batch: &[Example]) -> Result<f64> {
    if batch.is_empty() {
        return Err(NeuralError::DatasetEmpty);
    }
    let sum: f64 = logits.iter().zip(batch).map(|(l, ex)| logit_loss(l.view(), ex.action.code() as usize)).sum();
    Ok(sum / batch.len() as f64)
}

/// Losses of `params` on `batch` (forward passes only).
pub fn evaluate(params: &ModelParams, batch: &[Example]) -> Result<LossBreakdown> {
    let mut fast = Vec::with_capacity(batch.len());
    let mut slow = Vec::with_capacity(batch.len());
    for ex in batch {
        let out = forward(params, &ex.input, &ex.meta)?;
        fast.push(out.action_logits);
        slow.push(out.slow_logits);
    }
    let f = fast_loss_from_logits(&fast, batch)?;
    let s = slow_loss_from_logits(&slow, batch)?;
    Ok(LossBreakdown { fast: f, slow: s, total: combine(f, s) })
}

pub fn slow_loss(params: &ModelParams, batch: &[Example]) -> Result<f64> {
    evaluate(params, batch).map(|l| l.slow)
}

pub fn fast_loss(params: &ModelParams, batch: &[Example]) -> Result<f64> {
    evaluate(params, batch).map(|l| l.fast)
}

pub fn total_loss(params: &ModelParams, batch: &[Example]) -> Result<f64> {
    evaluate(params, batch).map(|l| l.total)
}

/// Losses and the gradient of the total loss with respect to all parameters.
pub fn loss_and_grad(params: &ModelParams, batch: &[Example]) -> Result<(LossBreakdown, Buffer)> {
    if batch.is_empty() {
        return Err(NeuralError::DatasetEmpty);
    }
    let weights: Vec<[f64; SEQ_LEN]> = batch.iter().map(|ex| position_weights(&ex.weights)).collect();
    let den: f64 = weights.iter().flat_map(|w| w.iter()).sum();
    if den == 0.0 {
        return Err(NeuralError::ZeroWeightSum);
    }
    let b = batch.len() as f64;
    let mut grads = Buffer::zeros(&params.layout);
    let (mut fast_sum, mut slow_num) = (0.0, 0.0);
    for (ex, w) in batch.iter().zip(&weights) {
        let (out, cache) = forward_with_cache(params, &ex.input, &ex.meta)?;
        let label = ex.action.code() as usize;
        fast_sum += logit_loss(out.action_logits.view(), label);
        let mut d_action = softmax(out.action_logits.view());
        d_action[label] -= 1.0;
        d_action /= b;

        let mut d_slow = Array2::zeros(out.slow_logits.raw_dim());
        for (k, &wk) in w.iter().enumerate() {
            if wk == 0.0 {
                continue;
            }
            let row = out.slow_logits.row(k);
            let label = ex.target[k] as usize;
            slow_num += wk * logit_loss(row, label);
            let mut d = softmax(row);
            d[label] -= 1.0;
            d *= SLOW_LOSS_WEIGHT * wk / den;
            d_slow.row_mut(k).assign(&d);
        }
        backward(params, &cache, d_action.view(), &d_slow, &mut grads);
    }
    let fast = fast_sum / b;
    let slow = slow_num / den;
    Ok((LossBreakdown { fast, slow, total: combine(fast, slow) }, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn token_loss_examples() {
        let uniform = Array1::from_elem(60, 1.0 / 60.0);
        assert!((token_loss(uniform.view(), 17) - 60f64.ln()).abs() < 1e-12);
        assert_eq!(token_loss(array![0.0, 1.0].view(), 1), 0.0);
        assert!((token_loss(array![0.5, 0.5].view(), 0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn logit_loss_matches_softmax_loss() {
        let l = array![0.3, -1.2, 2.0, 0.0, 0.5];
        let p = softmax(l.view());
        assert!((p.sum() - 1.0).abs() < 1e-12);
        for k in 0..5 {
            assert!((logit_loss(l.view(), k) - token_loss(p.view(), k)).abs() < 1e-12);
        }
        assert!((logit_loss(Array1::zeros(5).view(), 2) - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine(2.0, 1.0), 2.5);
        assert_eq!(combine(0.0, 0.0), 0.0);
        assert!((combine(1.609, 4.094) - 3.656).abs() < 1e-12);
    }
}
