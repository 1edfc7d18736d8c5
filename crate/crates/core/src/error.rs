use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate {entity} identifier `{id}`")]
    DuplicateId { entity: &'static str, id: String },

    #[error("unknown {entity} `{id}`")]
    UnknownId { entity: &'static str, id: String },

    #[error("integrity violation: {0}")]
    Integrity(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid value for reliability factor {factor}: {reason}")]
    FactorDomain { factor: &'static str, reason: String },

    #[error("observation time {observe_at} precedes publication of `{doc_id}` at {publish_time}")]
    ObservationBeforePublish {
        doc_id: String,
        observe_at: i64,
        publish_time: i64,
    },

    #[error("model `{0}` has not been trained")]
    Untrained(String),

    #[error("cannot train model `{model}`: {reason}")]
    Training { model: String, reason: String },

    #[error("aggregation failed: {0}")]
    Aggregation(String),

    #[error("explanation failed: {0}")]
    Explanation(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("serialization failed")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
