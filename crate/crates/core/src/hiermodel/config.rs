use serde::{Deserialize, Serialize};

use super::ModelError;

/// Hyper-parameters of the hierarchical model and its training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    pub word_hidden: usize,
    pub sentence_hidden: usize,
    /// Weight of the sentence loss against the document loss.
    pub alpha: f64,
    /// Weight of the polarity loss.
    pub beta: f64,
    /// Weight of the structured sentence-document loss.
    pub gamma: f64,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub epochs: usize,
    pub seed: u64,
    pub trainable_embeddings: bool,
    /// Per-language vocabulary cap, most frequent words first.
    pub vocab_cap: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 50,
            word_hidden: 32,
            sentence_hidden: 32,
            alpha: 0.3,
            beta: 0.1,
            gamma: 0.7,
            learning_rate: 1e-3,
            clip_norm: 5.0,
            epochs: 10,
            seed: 17,
            trainable_embeddings: true,
            vocab_cap: 20_000,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: &str| Err(ModelError::Config(msg.to_string()));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if !(self.beta >= 0.0 && self.gamma >= 0.0) {
            return bad("beta and gamma must be nonnegative");
        }
        if self.embedding_dim == 0 || self.word_hidden == 0 || self.sentence_hidden == 0 {
            return bad("dimensions must be positive");
        }
        if !(self.learning_rate > 0.0 && self.clip_norm > 0.0) {
            return bad("learning_rate and clip_norm must be positive");
        }
        if self.vocab_cap == 0 {
            return bad("vocab_cap must be positive");
        }
        Ok(())
    }
}
