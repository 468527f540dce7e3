//! Statistics of the learned spatial encoding over the 11×11 field of view.

use mapf_core::tokenizer::{map_offset, MAP_TOKENS};

use crate::params::ModelParams;
use crate::sre::polar;

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    /// Mean cosine similarity over pairs at Manhattan distance 1.
    pub adjacent_mean: f64,
    /// Mean cosine similarity over all other pairs.
    pub non_adjacent_mean: f64,
    /// Pearson correlation between pairwise similarity and Euclidean distance.
    pub distance_correlation: f64,
    /// Number of distinct similarity values after rounding to 2 decimals.
    pub distinct_levels: usize,
}

/// Encodings of the 121 cost-map positions, `Linear(polar(offset))`.
pub fn map_encodings(params: &ModelParams) -> Vec<Vec<f64>> {
    let l = &params.layout;
    let w = params.mat(l.sre_w);
    let b = params.vec(l.sre_b);
    (0..MAP_TOKENS)
        .map(|k| {
            let (r, c) = map_offset(k);
            let u = polar(c, r);
            (0..b.len()).map(|j| b[j] + u[0] * w[[0, j]] + u[1] * w[[1, j]] + u[2] * w[[2, j]]).collect()
        })
        .collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    match (na == 0.0, nb == 0.0) {
        (true, true) => 1.0,
        (false, false) => dot / (na * nb),
        _ => 0.0,
    }
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Report over a given set of 121 encodings (row-major FoV order).
pub fn similarity_report_for(encodings: &[Vec<f64>]) -> SimilarityReport {
    let (mut adj, mut non) = (Vec::new(), Vec::new());
    let (mut sims, mut dists) = (Vec::new(), Vec::new());
    let mut levels = std::collections::BTreeSet::new();
    for i in 0..encodings.len() {
        for j in i + 1..encodings.len() {
            let s = cosine(&encodings[i], &encodings[j]);
            let (a, b) = (map_offset(i), map_offset(j));
            let (dr, dc) = ((a.0 - b.0) as f64, (a.1 - b.1) as f64);
            if dr.abs() + dc.abs() == 1.0 {
                adj.push(s);
            } else {
                non.push(s);
            }
            sims.push(s);
            dists.push(dr.hypot(dc));
            levels.insert((s * 100.0).round() as i64);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    SimilarityReport {
        adjacent_mean: mean(&adj),
        non_adjacent_mean: mean(&non),
        distance_correlation: pearson(&sims, &dists),
        distinct_levels: levels.len(),
    }
}

pub fn sre_similarity_report(params: &ModelParams) -> SimilarityReport {
    similarity_report_for(&map_encodings(params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;

    #[test]
    fn constant_encoding_is_degenerate() {
        let enc = vec![vec![0.3, -1.0, 2.0]; MAP_TOKENS];
        let r = similarity_report_for(&enc);
        assert!((r.adjacent_mean - 1.0).abs() < 1e-12);
        assert!((r.non_adjacent_mean - 1.0).abs() < 1e-12);
        assert_eq!(r.distance_correlation, 0.0);
        assert_eq!(r.distinct_levels, 1);
    }

    #[test]
    fn lifted_cartesian_is_distance_aware() {
        // (x, y, 10): cosine similarity falls off with planar distance.
        let enc: Vec<Vec<f64>> = (0..MAP_TOKENS)
            .map(|k| {
                let (r, c) = map_offset(k);
                vec![c as f64, r as f64, 10.0]
            })
            .collect();
        let r = similarity_report_for(&enc);
        assert!(r.distance_correlation < 0.0);
        assert!(r.adjacent_mean > r.non_adjacent_mean);
    }

    #[test]
    fn report_is_deterministic() {
        let p = ModelParams::init(&ModelConfig::tiny()).unwrap();
        assert_eq!(sre_similarity_report(&p), sre_similarity_report(&p));
    }
}
