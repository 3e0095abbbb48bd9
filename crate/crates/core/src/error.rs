use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is out of range (expected 2 <= d <= {1})")]
    Dimension(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("index {name}={value} outside 0..{dim}")]
    IndexOutOfRange { name: &'static str, value: i64, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero factor matrix has no normalization")]
    ZeroFactor,

    #[error("state is not pure (purity {0})")]
    NotPure(f64),

    #[error("target trace {target} outside attainable range [{min}, {max}]")]
    InfeasibleTrace { target: f64, min: f64, max: f64 },

    #[error("cross-section at t={0} is empty")]
    EmptySlice(f64),

    #[error("measured observables are insensitive: {0}")]
    Insensitive(String),

    #[error("ill-conditioned covariance of measured observables (condition number {0:e}); choose a different measured set")]
    IllConditioned(f64),

    #[error("moment inversion failed: {0}")]
    NonInvertible(String),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
