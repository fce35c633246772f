use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context} at line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("dataset `{0}` has no rows")]
    EmptyDataset(String),

    #[error("target column `{0}` not found")]
    MissingTarget(String),

    #[error("target column `{column}` is not numeric (value `{value}`)")]
    NonNumericTarget { column: String, value: String },

    #[error("target of dataset `{0}` is constant")]
    ConstantTarget(String),

    #[error("dataset `{0}` is already normalized")]
    AlreadyNormalized(String),

    #[error("dataset `{0}` must be normalized first")]
    NotNormalized(String),

    #[error("unknown category `{category}` in column `{column}`")]
    UnknownCategory { column: String, category: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("feature-extractor config hash mismatch: model expects {expected}, got {actual}")]
    ConfigHashMismatch { expected: String, actual: String },

    #[error("duplicate dataset name `{0}`")]
    DuplicateName(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
