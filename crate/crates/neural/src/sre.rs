//! Spatial relational encoding.
//!
//! Every position that carries a spatial meaning gets `Linear(polar(x, y))`
//! added to its token embedding, with one linear map `R^3 -> R^d` shared by
//! all positions:
//!
//! * cost-map position: its fixed offset from the ego cell;
//! * occupied agent segment: the agent's relative position for tokens 1–2,
//!   its relative goal for tokens 3–4 and the goal displacement for tokens
//!   5–10;
//! * empty segments and the five tail positions: zero.
//!
//! Offsets are `(row, col)` on the grid; they enter `polar` as `x = col`,
//! `y = row`.

use mapf_core::tokenizer::{map_offset, segment_start, SreMeta, AGENT_SLOTS, MAP_TOKENS, SEGMENT_LEN, SEQ_LEN};
use ndarray::{Array2, ArrayView2};

use crate::error::{NeuralError, Result};
use crate::params::{ModelParams, SRE_IN};

/// `[r, sin θ, cos θ]` with `θ = atan2(y, x)`; the origin maps to `[0, 0, 1]`.
pub fn polar(x: i32, y: i32) -> [f64; 3] {
    if x == 0 && y == 0 {
        return [0.0, 0.0, 1.0];
    }
    let (x, y) = (x as f64, y as f64);
    let theta = y.atan2(x);
    [x.hypot(y), theta.sin(), theta.cos()]
}

fn polar_rc((row, col): (i32, i32)) -> [f64; 3] {
    polar(col, row)
}

/// Per-position polar features, `None` where the encoding is zero.
pub fn sre_features(meta: &SreMeta) -> Vec<Option<[f64; SRE_IN]>> {
    let mut out = vec![None; SEQ_LEN];
    for (k, slot) in out.iter_mut().enumerate().take(MAP_TOKENS) {
        *slot = Some(polar_rc(map_offset(k)));
    }
    for (slot, geom) in meta.slots.iter().enumerate().take(AGENT_SLOTS) {
        let Some(g) = geom else { continue };
        let (ps, pg, pd) = (polar_rc(g.pos), polar_rc(g.goal), polar_rc(g.displacement()));
        let s = segment_start(slot);
        for (i, entry) in out[s..s + SEGMENT_LEN].iter_mut().enumerate() {
            *entry = Some(match i {
                0 | 1 => ps,
                2 | 3 => pg,
                _ => pd,
            });
        }
    }
    out
}

/// Applies the shared linear map to precomputed features.
pub fn encode_features(features: &[Option<[f64; SRE_IN]>], w: ArrayView2<f64>, b: &[f64]) -> Result<Array2<f64>> {
    if features.len() != SEQ_LEN || w.nrows() != SRE_IN || w.ncols() != b.len() {
        return Err(NeuralError::ShapeMismatch(format!(
            "features {} / linear {:?} / bias {}",
            features.len(),
            w.shape(),
            b.len()
        )));
    }
    let d = b.len();
    let mut out = Array2::zeros((SEQ_LEN, d));
    for (k, f) in features.iter().enumerate() {
        if let Some(u) = f {
            let mut row = out.row_mut(k);
            for j in 0..d {
                row[j] = b[j] + u[0] * w[[0, j]] + u[1] * w[[1, j]] + u[2] * w[[2, j]];
            }
        }
    }
    Ok(out)
}

/// The `256 × d` encoding of one observation.
pub fn sre_encode(meta: &SreMeta, params: &ModelParams) -> Result<Array2<f64>> {
    let l = &params.layout;
    let b = params.vec(l.sre_b);
    encode_features(&sre_features(meta), params.mat(l.sre_w), b.as_slice().expect("contiguous"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelConfig;
    use mapf_core::tokenizer::SlotGeometry;

    #[test]
    fn polar_examples() {
        let p = polar(3, 4);
        assert!((p[0] - 5.0).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15 && (p[2] - 0.6).abs() < 1e-15);
        assert_eq!(polar(0, 0), [0.0, 0.0, 1.0]);
        let p = polar(-2, 0);
        assert_eq!(p[0], 2.0);
        assert!(p[1].abs() < 1e-15);
        assert_eq!(p[2], -1.0);
    }

    #[test]
    fn polar_is_injective_on_fov() {
        let mut seen: Vec<[f64; 3]> = Vec::new();
        for k in 0..MAP_TOKENS {
            let (r, c) = map_offset(k);
            let p = polar(c, r);
            assert!(seen.iter().all(|q| q != &p), "duplicate polar for offset {:?}", (r, c));
            seen.push(p);
        }
    }

    #[test]
    fn segment_structure_and_zero_tail() {
        let params = ModelParams::init(&ModelConfig::tiny()).unwrap();
        let mut meta = SreMeta::default();
        meta.slots[0] = Some(SlotGeometry { pos: (0, 0), goal: (3, -2) });
        meta.slots[4] = Some(SlotGeometry { pos: (1, 1), goal: (5, 2) });
        let enc = sre_encode(&meta, &params).unwrap();
        for slot in [0, 4] {
            let s = segment_start(slot);
            assert_eq!(enc.row(s), enc.row(s + 1));
            assert_eq!(enc.row(s + 2), enc.row(s + 3));
            for i in 5..10 {
                assert_eq!(enc.row(s + 4), enc.row(s + i));
            }
        }
        for k in 251..256 {
            assert!(enc.row(k).iter().all(|&v| v == 0.0));
        }
        let empty = segment_start(1);
        assert!(enc.row(empty).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn displacement_feeds_the_last_six_rows() {
        let mut meta = SreMeta::default();
        meta.slots[2] = Some(SlotGeometry { pos: (1, 1), goal: (5, 2) });
        let features = sre_features(&meta);
        let s = segment_start(2);
        // g - s = (4, 1) in (row, col); x = col, y = row.
        assert_eq!(features[s + 4], Some(polar(1, 4)));
        assert_eq!(features[s + 9], Some(polar(1, 4)));
        assert_eq!(features[s], Some(polar(1, 1)));
        assert_eq!(features[s + 2], Some(polar(2, 5)));
    }
}
