use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    /// Smallest eigenvalue is below the clamp tolerance.
    #[error("matrix is not positive semidefinite: eigenvalue {min_eigenvalue:e} < -{tolerance:e}")]
    NotPsd { min_eigenvalue: f64, tolerance: f64 },

    /// An iterative routine hit its cap; carries the last estimate.
    #[error("{routine} did not converge after {iterations} iterations (last estimate {last_estimate})")]
    NumericalFailure {
        routine: &'static str,
        iterations: usize,
        last_estimate: f64,
    },

    /// A deterministic inequality that must hold did not.
    #[error("{what} violated: {lhs} > {rhs}")]
    BoundViolated { what: String, lhs: f64, rhs: f64 },

    /// Exhaustive enumeration requested beyond the supported size.
    #[error("size guard: dimension {p} exceeds the enumeration limit {limit}")]
    SizeGuard { p: usize, limit: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
