//! Hierarchical sentence/document model and its joint training objective.

mod checkpoint;
mod config;
mod loss;
mod model;
mod train;
mod vocab;

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::diffcore::DiffError;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, MAGIC};
pub use config::ModelConfig;
pub use loss::{loss_document, loss_polarity, loss_sentence, loss_structured, loss_total, mean_balance, LossComponents};
pub use model::{DocumentGraph, DocumentTargets, HierModel, Prediction, SentencePrediction};
pub use train::{corpus_loss, predict, train, train_from, EpochStats, TrainReport};
pub use vocab::{Vocabulary, GLOBAL_UNK};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("missing gold: {0}")]
    MissingGold(String),
    #[error("no supervised documents")]
    NoSupervision,
    #[error("document {0} has no sentences")]
    EmptyDocument(String),
    #[error("document {id}: sentence {position} has no tokens")]
    EmptySentence { id: String, position: usize },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[cfg(test)]
mod tests;
