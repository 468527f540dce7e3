use mapf_core::tokenizer::{Vocab, SEQ_LEN};

use crate::error::{NeuralError, Result};

/// Model shape and training hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub ffn_mult: usize,
    pub vocab_size: usize,
    pub seq_len: usize,
    /// Add the spatial relational encoding to the token embeddings.
    pub use_sre: bool,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub warmup_steps: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    /// Desk-scale model: 64 wide, 4 layers, 4 heads.
    fn default() -> Self {
        Self {
            d_model: 64,
            n_layers: 4,
            n_heads: 4,
            ffn_mult: 4,
            vocab_size: Vocab::SIZE,
            seq_len: SEQ_LEN,
            use_sre: true,
            learning_rate: 3e-4,
            batch_size: 32,
            warmup_steps: 100,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// Small model that trains in minutes on one CPU core.
    pub fn toy() -> Self {
        Self {
            d_model: 32,
            n_layers: 2,
            n_heads: 4,
            ffn_mult: 2,
            learning_rate: 2e-3,
            batch_size: 16,
            warmup_steps: 50,
            ..Self::default()
        }
    }

    /// One-layer, 8-wide model used for gradient checks.
    pub fn tiny() -> Self {
        Self { d_model: 8, n_layers: 1, n_heads: 2, ffn_mult: 2, batch_size: 2, ..Self::default() }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn ffn_dim(&self) -> usize {
        self.d_model * self.ffn_mult
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NeuralError::InvalidConfig(m));
        if self.d_model == 0 || self.n_heads == 0 || self.n_layers == 0 || self.ffn_mult == 0 {
            return bad("dimensions must be positive".into());
        }
        if self.d_model % self.n_heads != 0 {
            return bad(format!("d_model {} not divisible by n_heads {}", self.d_model, self.n_heads));
        }
        if self.vocab_size != Vocab::SIZE || self.seq_len != SEQ_LEN {
            return bad(format!(
                "vocab {} / seq_len {} must be {} / {}",
                self.vocab_size,
                self.seq_len,
                Vocab::SIZE,
                SEQ_LEN
            ));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {}", self.learning_rate));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        ModelConfig::default().validate().unwrap();
        ModelConfig::toy().validate().unwrap();
        ModelConfig::tiny().validate().unwrap();
        let d = ModelConfig::default();
        assert_eq!((d.d_model, d.n_layers, d.n_heads), (64, 4, 4));
    }

    #[test]
    fn heads_must_divide_width() {
        let cfg = ModelConfig { n_heads: 3, ..ModelConfig::tiny() };
        assert!(cfg.validate().is_err());
    }
}
