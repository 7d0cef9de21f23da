use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid pair ({0}, {1}): items must be distinct")]
    InvalidPair(usize, usize),

    #[error("selection is not single-coordinate: pair ({i}, {j}) uses {len} coordinates")]
    NotSingleCoordinate { i: usize, j: usize, len: usize },

    #[error("need at least {needed} items, got {got}")]
    InsufficientItems { needed: usize, got: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("probability {value} for pair ({i}, {j}) is outside [0, 1]")]
    InvalidProbability { i: usize, j: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("unknown item id `{0}`")]
    UnknownId(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
