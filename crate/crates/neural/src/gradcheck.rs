//! Finite-difference verification of the analytic gradient.
//!
//! A subset `S` of parameter coordinates is sampled (at least one from every
//! tensor). Each probe direction `v` is supported on `S` and mixes the
//! normalized analytic gradient restricted to `S` with a random unit vector,
//! so the directional derivative is never vanishingly small. The analytic
//! value `g·v` is compared with the central difference
//! `(L(θ+εv) − L(θ−εv)) / 2ε`.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::example::Example;
use crate::loss::{loss_and_grad, total_loss};
use crate::params::{Buffer, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckOptions {
    pub n_coords: usize,
    pub n_probes: usize,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { n_coords: 256, n_probes: 16, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub coords_sampled: usize,
    pub probes: usize,
}

/// Checks the gradient returned by [`loss_and_grad`].
pub fn grad_check(params: &ModelParams, batch: &[Example], epsilon: f64) -> Result<GradCheckReport> {
    let (_, grads) = loss_and_grad(params, batch)?;
    grad_check_against(params, batch, epsilon, &grads, &GradCheckOptions::default())
}

/// Checks an externally supplied gradient.
pub fn grad_check_against(
    params: &ModelParams,
    batch: &[Example],
    epsilon: f64,
    analytic: &Buffer,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let layout = &params.layout;
    let mut chosen: BTreeSet<usize> = layout.ids().map(|id| rng.random_range(layout.range(id))).collect();
    let target = opts.n_coords.min(layout.total);
    while chosen.len() < target {
        chosen.insert(rng.random_range(0..layout.total));
    }
    let coords: Vec<usize> = chosen.into_iter().collect();

    let g: Vec<f64> = coords.iter().map(|&i| analytic.data[i]).collect();
    let g_hat = normalized(&g);
    let mut probe = params.clone();
    let mut max_rel: f64 = 0.0;
    for _ in 0..opts.n_probes {
        let r: Vec<f64> = normalized(&(0..coords.len()).map(|_| rng.sample(StandardNormal)).collect::<Vec<f64>>());
        let v = normalized(&g_hat.iter().zip(&r).map(|(a, b)| a + b).collect::<Vec<_>>());
        let a: f64 = g.iter().zip(&v).map(|(x, y)| x * y).sum();

        for (&i, &vi) in coords.iter().zip(&v) {
            probe.weights.data[i] = params.weights.data[i] + epsilon * vi;
        }
        let plus = total_loss(&probe, batch)?;
        for (&i, &vi) in coords.iter().zip(&v) {
            probe.weights.data[i] = params.weights.data[i] - epsilon * vi;
        }
        let minus = total_loss(&probe, batch)?;
        for &i in &coords {
            probe.weights.data[i] = params.weights.data[i];
        }
        let n = (plus - minus) / (2.0 * epsilon);
        let scale = a.abs().max(n.abs());
        let rel = if scale == 0.0 { 0.0 } else { (a - n).abs() / scale };
        max_rel = max_rel.max(rel);
    }
    Ok(GradCheckReport { max_rel_error: max_rel, coords_sampled: coords.len(), probes: opts.n_probes })
}

fn normalized(x: &[f64]) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0.0 {
        x.to_vec()
    } else {
        x.iter().map(|v| v / n).collect()
    }
}
