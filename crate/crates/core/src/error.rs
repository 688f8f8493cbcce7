//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by signal construction, dictionary evaluation,
/// inference and the simulation/metric helpers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("digamma domain error: argument must be positive, got {0}")]
    DigammaDomain(f64),

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),

    #[error("invalid dictionary: {0}")]
    InvalidDictionary(String),

    #[error("parameter out of dictionary domain: {0}")]
    OutOfDomain(String),

    #[error("component index {index} outside [{l_min}, {l_max}]")]
    IndexOutOfRange {
        index: i64,
        l_min: i64,
        l_max: i64,
    },

    #[error("linear system numerically singular after {attempts} jitter attempts")]
    SingularSystem { attempts: usize },

    #[error("degenerate noiseless fit: noise-precision denominator is zero")]
    DegenerateNoiselessFit,

    #[error("non-finite value in input signal")]
    NonFiniteInput,

    #[error("rejection sampling failed after {0} draws")]
    RejectionSamplingFailed(usize),

    #[error("no components associated with the object region")]
    EmptyAssociation,

    #[error("zero signal where a nonzero one is required: {0}")]
    ZeroSignal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
