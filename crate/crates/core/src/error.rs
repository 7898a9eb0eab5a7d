use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: column `{column}`: {message}")]
    Schema {
        path: PathBuf,
        line: u64,
        column: String,
        message: String,
    },

    #[error("{path}: bad header: expected `{expected}`, found `{found}`")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("column `{0}` has no present values to impute from")]
    EmptyColumn(String),

    #[error("record {index} still has a missing `{column}` value")]
    Incomplete { index: usize, column: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown store {0} (not present in store metadata)")]
    UnknownStore(u32),

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("model has no features to fit")]
    NoFeatures,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("metric undefined: {0}")]
    Undefined(&'static str),

    #[error("model is not fitted")]
    NotFitted,

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
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

    /// True for failures caused by bad input data or arguments, as opposed
    /// to failures while computing.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Io { .. }
            | Error::Schema { .. }
            | Error::Header { .. }
            | Error::EmptyColumn(_)
            | Error::Incomplete { .. }
            | Error::InvalidArgument(_)
            | Error::UnknownStore(_)
            | Error::MissingColumn(_)
            | Error::Serde(_)
            | Error::Csv(_) => true,
            Error::Fold { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}
