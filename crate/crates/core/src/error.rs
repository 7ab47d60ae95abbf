use thiserror::Error;

use crate::embeddings::EmbeddingError;
use crate::eval::EvalError;
use crate::nn::NnError;
use crate::pipeline::ValidationError;
use crate::tags::TagError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Tag(#[from] TagError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("{0}")]
    Data(String),
    #[error("config: {0}")]
    Config(String),
    #[error("invalid pipeline: {}", join(.0))]
    InvalidPipeline(Vec<ValidationError>),
    #[error("{source} in stage {stage}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error("benchmark outputs differ: {0}")]
    Equivalence(String),
}

impl Error {
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

fn join(errors: &[ValidationError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
