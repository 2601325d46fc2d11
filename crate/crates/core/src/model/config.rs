use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Size preset. `Desk` keeps every dimension small enough for CPU
/// experiments in seconds; `Fidelity` uses the published configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Desk,
    Fidelity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub word_dim: usize,
    pub pos_dim: usize,
    pub lemma_dim: usize,
    /// Width of the per-character embedding fed to the character CNN.
    pub char_dim: usize,
    /// Number of CNN filters, i.e. the size of the character-level token embedding.
    pub char_filters: usize,
    pub char_window: usize,
    pub lstm_layers: usize,
    /// Encoder output size (both directions together).
    pub hidden_size: usize,
    /// Multi-hop representation size.
    pub graph_dim: usize,
    pub hop_layers: usize,
    pub mlp_hidden: usize,
    /// Query/key width of every rotary scorer. Must be even.
    pub score_dim: usize,
    pub embedding_dropout: f64,
    pub dropout: f64,
    pub freeze_word_embeddings: bool,
}

impl ModelConfig {
    pub fn desk() -> Self {
        Self {
            word_dim: 16,
            pos_dim: 4,
            lemma_dim: 8,
            char_dim: 8,
            char_filters: 8,
            char_window: 3,
            lstm_layers: 1,
            hidden_size: 32,
            graph_dim: 32,
            hop_layers: 2,
            mlp_hidden: 16,
            score_dim: 16,
            embedding_dropout: 0.4,
            dropout: 0.3,
            freeze_word_embeddings: false,
        }
    }

    pub fn fidelity() -> Self {
        Self {
            word_dim: 100,
            pos_dim: 50,
            lemma_dim: 100,
            char_dim: 50,
            char_filters: 100,
            char_window: 3,
            lstm_layers: 4,
            hidden_size: 400,
            graph_dim: 768,
            hop_layers: 2,
            mlp_hidden: 256,
            score_dim: 64,
            embedding_dropout: 0.4,
            dropout: 0.3,
            freeze_word_embeddings: true,
        }
    }

    /// Very small dimensions for unit tests and quick gradient checks.
    pub fn tiny() -> Self {
        Self {
            word_dim: 4,
            pos_dim: 2,
            lemma_dim: 2,
            char_dim: 3,
            char_filters: 4,
            char_window: 3,
            lstm_layers: 1,
            hidden_size: 8,
            graph_dim: 6,
            hop_layers: 2,
            mlp_hidden: 5,
            score_dim: 4,
            embedding_dropout: 0.0,
            dropout: 0.0,
            freeze_word_embeddings: false,
        }
    }

    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Desk => Self::desk(),
            Preset::Fidelity => Self::fidelity(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.word_dim + self.pos_dim + self.lemma_dim + self.char_filters
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("word_dim", self.word_dim),
            ("char_dim", self.char_dim),
            ("char_filters", self.char_filters),
            ("char_window", self.char_window),
            ("lstm_layers", self.lstm_layers),
            ("hidden_size", self.hidden_size),
            ("graph_dim", self.graph_dim),
            ("hop_layers", self.hop_layers),
            ("mlp_hidden", self.mlp_hidden),
            ("score_dim", self.score_dim),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if !self.hidden_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "hidden_size {} must be even (two directions)",
                self.hidden_size
            )));
        }
        if !self.score_dim.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "score_dim {} must be even for rotary scoring",
                self.score_dim
            )));
        }
        for (name, rate) in [
            ("embedding_dropout", self.embedding_dropout),
            ("dropout", self.dropout),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} {rate} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::desk()
    }
}
