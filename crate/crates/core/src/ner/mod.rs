//! BiLSTM-CNN-char named entity tagger.
//!
//! Each token is represented by a max-pooled character convolution
//! concatenated with its (frozen) word vector. A bidirectional LSTM runs over
//! the sentence and a dense layer with softmax scores the tags per token.

mod dataset;
mod model;
mod network;
mod stage;

pub use dataset::{NerDataset, TaggedSentence, LABEL_COLUMN};
pub use model::{train, train_with_vectors, word_vectors, EpochStats, NerModel};
pub use network::{EncodedSentence, NerDims, NerNetwork};
pub use stage::{NerApproach, NerTagger};

use serde::{Deserialize, Serialize};

use crate::tags::TagScheme;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NerConfig {
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub decay_po: f64,
    pub batch_size: usize,
    pub dropout: f64,
    pub validation_split: f64,
    pub char_embedding_dim: usize,
    pub char_filters: usize,
    pub char_window: usize,
    pub lstm_hidden: usize,
    pub tag_scheme: TagScheme,
    pub seed: u64,
}

impl Default for NerConfig {
    fn default() -> Self {
        NerConfig {
            max_epochs: 10,
            learning_rate: 0.001,
            decay_po: 0.005,
            batch_size: 8,
            dropout: 0.5,
            validation_split: 0.2,
            char_embedding_dim: 25,
            char_filters: 30,
            char_window: 3,
            lstm_hidden: 200,
            tag_scheme: TagScheme::Bio,
            seed: 42,
        }
    }
}

impl NerConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.to_string())) };
        check((0.0..1.0).contains(&self.dropout), "dropout must be in [0, 1)")?;
        check(
            (0.0..1.0).contains(&self.validation_split),
            "validation_split must be in [0, 1)",
        )?;
        check(self.learning_rate > 0.0, "learning_rate must be positive")?;
        check(self.decay_po >= 0.0, "decay_po must be non-negative")?;
        check(
            self.max_epochs > 0
                && self.batch_size > 0
                && self.char_embedding_dim > 0
                && self.char_filters > 0
                && self.char_window > 0
                && self.lstm_hidden > 0,
            "sizes must be positive",
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_training_listing() {
        let c = NerConfig::default();
        assert_eq!(c.max_epochs, 10);
        assert_eq!(c.learning_rate, 0.001);
        assert_eq!(c.decay_po, 0.005);
        assert_eq!(c.batch_size, 8);
        assert_eq!(c.dropout, 0.5);
        assert_eq!(c.validation_split, 0.2);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            NerConfig { dropout: 1.0, ..Default::default() },
            NerConfig { validation_split: -0.1, ..Default::default() },
            NerConfig { batch_size: 0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn partial_toml() {
        let c: NerConfig = toml::from_str("max_epochs = 3\ntag_scheme = \"bioes\"").unwrap();
        assert_eq!(c.max_epochs, 3);
        assert_eq!(c.tag_scheme, TagScheme::Bioes);
        assert_eq!(c.lstm_hidden, 200);
    }
}
