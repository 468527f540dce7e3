//! Flat parameter storage.
//!
//! Every tensor is a row-major matrix inside one `Vec<f64>`; [`Layout`] maps
//! tensor ids to offsets. Gradients and optimizer moments share the layout,
//! so the optimizer and the gradient checker work on plain slices.

use ndarray::{ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::ModelConfig;
use crate::error::Result;

pub const N_ACTIONS: usize = 5;
pub const SRE_IN: usize = 3;
const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId(usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LayerIds {
    pub ln1_g: TensorId,
    pub ln1_b: TensorId,
    pub wq: TensorId,
    pub bq: TensorId,
    pub wk: TensorId,
    pub bk: TensorId,
    pub wv: TensorId,
    pub bv: TensorId,
    pub wo: TensorId,
    pub bo: TensorId,
    pub ln2_g: TensorId,
    pub ln2_b: TensorId,
    pub w1: TensorId,
    pub b1: TensorId,
    pub w2: TensorId,
    pub b2: TensorId,
}

#[derive(Debug, Clone)]
pub struct Layout {
    pub specs: Vec<TensorSpec>,
    pub tok_emb: TensorId,
    pub sre_w: TensorId,
    pub sre_b: TensorId,
    pub layers: Vec<LayerIds>,
    pub lnf_g: TensorId,
    pub lnf_b: TensorId,
    pub slow_w: TensorId,
    pub slow_b: TensorId,
    pub fast_w: TensorId,
    pub fast_b: TensorId,
    pub total: usize,
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let mut specs: Vec<TensorSpec> = Vec::new();
        let mut add = |name: String, rows: usize, cols: usize| {
            let offset = specs.last().map_or(0, |s| s.offset + s.len());
            specs.push(TensorSpec { name, rows, cols, offset });
            TensorId(specs.len() - 1)
        };
        let (d, v, f) = (cfg.d_model, cfg.vocab_size, cfg.ffn_dim());
        let tok_emb = add("tok_emb".into(), v, d);
        let sre_w = add("sre_w".into(), SRE_IN, d);
        let sre_b = add("sre_b".into(), 1, d);
        let layers = (0..cfg.n_layers)
            .map(|l| {
                let mut t = |n: &str, r, c| add(format!("layer{l}.{n}"), r, c);
                LayerIds {
                    ln1_g: t("ln1_g", 1, d),
                    ln1_b: t("ln1_b", 1, d),
                    wq: t("wq", d, d),
                    bq: t("bq", 1, d),
                    wk: t("wk", d, d),
                    bk: t("bk", 1, d),
                    wv: t("wv", d, d),
                    bv: t("bv", 1, d),
                    wo: t("wo", d, d),
                    bo: t("bo", 1, d),
                    ln2_g: t("ln2_g", 1, d),
                    ln2_b: t("ln2_b", 1, d),
                    w1: t("w1", d, f),
                    b1: t("b1", 1, f),
                    w2: t("w2", f, d),
                    b2: t("b2", 1, d),
                }
            })
            .collect();
        let lnf_g = add("lnf_g".into(), 1, d);
        let lnf_b = add("lnf_b".into(), 1, d);
        let slow_w = add("slow_w".into(), d, v);
        let slow_b = add("slow_b".into(), 1, v);
        let fast_w = add("fast_w".into(), d, N_ACTIONS);
        let fast_b = add("fast_b".into(), 1, N_ACTIONS);
        let total = specs.last().map_or(0, |s| s.offset + s.len());
        Self { specs, tok_emb, sre_w, sre_b, layers, lnf_g, lnf_b, slow_w, slow_b, fast_w, fast_b, total }
    }

    pub fn spec(&self, id: TensorId) -> &TensorSpec {
        &self.specs[id.0]
    }

    pub fn range(&self, id: TensorId) -> std::ops::Range<usize> {
        let s = self.spec(id);
        s.offset..s.offset + s.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = TensorId> {
        (0..self.specs.len()).map(TensorId)
    }
}

/// A flat buffer shaped by a [`Layout`]; used for parameters and gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Buffer {
    pub data: Vec<f64>,
}

impl Buffer {
    pub fn zeros(layout: &Layout) -> Self {
        Self { data: vec![0.0; layout.total] }
    }

    pub fn mat(&self, layout: &Layout, id: TensorId) -> ArrayView2<'_, f64> {
        let s = layout.spec(id);
        ArrayView2::from_shape((s.rows, s.cols), &self.data[layout.range(id)]).expect("layout shape")
    }

    pub fn vec(&self, layout: &Layout, id: TensorId) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.data[layout.range(id)])
    }

    pub fn mat_mut(&mut self, layout: &Layout, id: TensorId) -> ArrayViewMut2<'_, f64> {
        let s = layout.spec(id);
        ArrayViewMut2::from_shape((s.rows, s.cols), &mut self.data[layout.range(id)]).expect("layout shape")
    }

    pub fn vec_mut(&mut self, layout: &Layout, id: TensorId) -> ArrayViewMut1<'_, f64> {
        ArrayViewMut1::from(&mut self.data[layout.range(id)])
    }
}

/// Model weights plus the configuration they were built for.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub layout: Layout,
    pub weights: Buffer,
    /// Optimizer steps applied so far.
    pub trained_steps: u64,
}

impl PartialEq for ModelParams {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.weights == other.weights && self.trained_steps == other.trained_steps
    }
}

impl ModelParams {
    /// Gaussian init (std 0.02) for matrices, unit gains and zero biases.
    pub fn init(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(config);
        let mut weights = Buffer::zeros(&layout);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let normal = Normal::new(0.0, INIT_STD).expect("finite std");
        for id in layout.ids() {
            let spec = layout.spec(id);
            let short = spec.name.rsplit('.').next().unwrap_or(&spec.name);
            let range = layout.range(id);
            if short.ends_with("_g") {
                weights.data[range].fill(1.0);
            } else if spec.rows > 1 {
                for w in &mut weights.data[range] {
                    *w = normal.sample(&mut rng);
                }
            }
        }
        Ok(Self { config: config.clone(), layout, weights, trained_steps: 0 })
    }

    pub fn n_params(&self) -> usize {
        self.layout.total
    }

    pub fn mat(&self, id: TensorId) -> ArrayView2<'_, f64> {
        self.weights.mat(&self.layout, id)
    }

    pub fn vec(&self, id: TensorId) -> ArrayView1<'_, f64> {
        self.weights.vec(&self.layout, id)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.data.iter().all(|w| w.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_contiguous() {
        let cfg = ModelConfig::tiny();
        let layout = Layout::new(&cfg);
        let mut next = 0;
        for s in &layout.specs {
            assert_eq!(s.offset, next);
            next += s.len();
        }
        assert_eq!(next, layout.total);
        assert_eq!(layout.spec(layout.tok_emb).rows, 60);
        assert_eq!(layout.spec(layout.sre_w).rows, 3);
        assert_eq!(layout.spec(layout.fast_w).cols, 5);
    }

    #[test]
    fn init_is_seeded() {
        let a = ModelParams::init(&ModelConfig::tiny()).unwrap();
        let b = ModelParams::init(&ModelConfig::tiny()).unwrap();
        assert_eq!(a, b);
        let c = ModelParams::init(&ModelConfig { seed: 1, ..ModelConfig::tiny() }).unwrap();
        assert_ne!(a, c);
        assert!(a.vec(a.layout.lnf_g).iter().all(|&g| g == 1.0));
        assert!(a.vec(a.layout.slow_b).iter().all(|&b| b == 0.0));
    }
}
