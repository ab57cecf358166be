use serde::{Deserialize, Serialize};

use super::{LmError, Result};

/// Architecture and optimiser settings. Defaults are the full-size model:
/// 5000-token vocabulary, 128-wide embeddings, two bidirectional LSTM layers
/// of 100 units per direction, two 50-unit ReLU layers and 50% dropout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Units per direction.
    pub recurrent_units: usize,
    pub recurrent_layers: usize,
    pub dense_units: usize,
    pub dense_layers: usize,
    pub dropout_rate: f64,
    pub seq_len: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            vocab_size: 5000,
            embed_dim: 128,
            recurrent_units: 100,
            recurrent_layers: 2,
            dense_units: 50,
            dense_layers: 2,
            dropout_rate: 0.5,
            seq_len: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            epochs: 10,
            clip_norm: 5.0,
            seed: 42,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("embed_dim", self.embed_dim),
            ("recurrent_units", self.recurrent_units),
            ("recurrent_layers", self.recurrent_layers),
            ("dense_units", self.dense_units),
            ("dense_layers", self.dense_layers),
            ("seq_len", self.seq_len),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(LmError::Config(format!("{name} must be at least 1")));
        }
        if self.vocab_size < 3 {
            return Err(LmError::Config("vocab_size must leave room beyond PAD and UNK".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(LmError::Config(format!(
                "dropout_rate {} not in [0, 1)",
                self.dropout_rate
            )));
        }
        let positive = [
            ("learning_rate", self.learning_rate),
            ("epsilon", self.epsilon),
            ("clip_norm", self.clip_norm),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(LmError::Config(format!("{name} must be positive, got {v}")));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(LmError::Config(format!("{name} {b} not in [0, 1)")));
            }
        }
        Ok(())
    }

    /// Width of the flattened recurrent output fed to the first dense layer.
    pub fn flat_dim(&self) -> usize {
        self.seq_len * 2 * self.recurrent_units
    }
}
