use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// A data row violates a dataset invariant. `row` is 1-based.
    #[error("row {row} {message}")]
    InvalidRow { row: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A row of the logical label matrix has no positive label, so the
    /// restricted simplex for that row is empty.
    #[error("infeasible: empty support in row {row}")]
    EmptySupport { row: usize },

    #[error("zero degree at node {node}")]
    ZeroDegree { node: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("divergence at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("KL divergence is infinite: d[{index}] = {value} > 0 but prediction is 0")]
    InfiniteDivergence { index: usize, value: f64 },

    #[error("cosine similarity undefined for an all-zero vector")]
    ZeroVector,
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    InvalidInput,
    Infeasible,
    Divergence,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::EmptySupport { .. } => ErrorClass::Infeasible,
            Error::Divergence { .. } => ErrorClass::Divergence,
            _ => ErrorClass::InvalidInput,
        }
    }

    /// Attaches a row index to errors raised on a single vector.
    pub(crate) fn at_row(self, row: usize) -> Error {
        match self {
            Error::EmptySupport { .. } => Error::EmptySupport { row },
            other => Error::InvalidRow {
                row,
                message: other.to_string(),
            },
        }
    }
}
