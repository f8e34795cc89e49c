use std::path::PathBuf;

use thiserror::Error;

use crate::backend::BackendError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed XML at line {line}: {message}")]
    Xml { line: usize, message: String },

    #[error("malformed TSV at row {row}: {message}")]
    Tsv { row: usize, message: String },

    #[error("star rating {0} is outside 0..=5")]
    StarsOutOfRange(i64),

    #[error("unknown polarity label {0:?} (expected positive, negative or neutral)")]
    UnknownPolarity(String),

    #[error("unknown aspect category {category:?}; allowed: {allowed}")]
    UnknownCategory { category: String, allowed: String },

    #[error("invalid aspect category {0:?}: expected ENTITY#ATTRIBUTE")]
    MalformedCategory(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("few-shot split of {requested} examples requested but only {available} available")]
    SplitTooLarge { requested: usize, available: usize },

    #[error("render error: {0}")]
    Render(String),

    #[error("unconstrained backend output: {0:?} is not a verbalizer word")]
    UnconstrainedOutput(String),

    #[error("gold and prediction ids do not align: {0}")]
    IdMismatch(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Backend(#[from] BackendError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
