use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the label-trick library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("alpha must lie in the open interval (0, 1), got {0}")]
    AlphaOutOfRange(f64),

    #[error("lambda must lie in the open interval (0, 1), got {0}")]
    LambdaOutOfRange(f64),

    #[error(
        "graph has {n} nodes, above the dense threshold of {threshold}; use the truncated series operator instead"
    )]
    AboveDenseThreshold { n: usize, threshold: usize },

    #[error("operation requires a materialized propagation matrix (dense mode)")]
    DenseModeRequired,

    #[error(
        "exact split enumeration refused for {m} training nodes (limit {limit}); use Monte Carlo"
    )]
    EnumerationTooLarge { m: usize, limit: usize },

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("numerical integrity violated: {0}")]
    NumericalIntegrity(String),

    #[error("linear system is singular beyond jitter: {rank_deficiency} of {dim} directions are degenerate")]
    Singular { rank_deficiency: usize, dim: usize },

    #[error("model weights of kind {actual} cannot be used where {expected} is required")]
    WrongModelKind { expected: String, actual: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
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

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(
        context: &'static str,
        expected: impl std::fmt::Display,
        actual: impl std::fmt::Display,
    ) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}
