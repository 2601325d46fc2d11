use std::io;

use thiserror::Error;

use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("sentence {sent_id}: {message}")]
    Data { sent_id: String, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("gradient check failed: {failures} entries at or above tolerance {tolerance:e} (max relative error {max_rel_error:e})")]
    GradCheck {
        failures: usize,
        tolerance: f64,
        max_rel_error: f64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn data(sent_id: &str, message: impl Into<String>) -> Self {
        Error::Data {
            sent_id: sent_id.to_string(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit status: 2 for data problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFiniteLoss { .. } | Error::GradCheck { .. } => 3,
            Error::Tensor(TensorError::NonFinite { .. }) => 3,
            _ => 2,
        }
    }
}
