use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("value {value} in dimension {dim} lies outside [{lo}, {hi}]")]
    OutOfSupport {
        dim: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// No constraint rows were produced; callers usually fall back to plain OLS.
    #[error("constraint set is empty")]
    EmptyConstraints,

    #[error("{what} is not finite at point {point:?}")]
    Evaluation { what: &'static str, point: Vec<f64> },

    #[error("covariance matrix is not positive semidefinite (min eigenvalue {min_eig:e}, max {max_eig:e})")]
    NotPositiveSemidefinite { min_eig: f64, max_eig: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("model file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
