use thiserror::Error;

/// Errors raised by the optimizers, objectives and numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OeoError {
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("point outside the search box")]
    OutOfBounds,
    #[error("cluster has {have} members, {need} required")]
    TooFewMembers { have: usize, need: usize },
    #[error("all roulette weights are zero")]
    ZeroWeights,
    #[error("zero vector")]
    ZeroVector,
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("matrix is numerically singular (condition estimate {0:e})")]
    Singular(f64),
    #[error("denominator {0:e} is too small")]
    DegenerateDenominator(f64),
    #[error("objective evaluation failed: {0}")]
    Evaluation(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T, E = OeoError> = std::result::Result<T, E>;
