use thiserror::Error;

/// Errors produced by the estimators, iterations and I/O helpers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("profile argument must be non-negative, got {0}")]
    NegativeArgument(f64),

    #[error("dimension {0} outside supported range 1..=10")]
    UnsupportedDimension(usize),

    #[error("profile is not integrable in dimension {0}")]
    NotIntegrable(usize),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),

    #[error("non-finite value in sample {row}")]
    NonFinite { row: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("no active kernel weights at the evaluation point")]
    NoActiveWeights,

    #[error("ascent violated at step {step}: r*(z) went from {before} to {after}")]
    AscentViolation { step: usize, before: f64, after: f64 },

    #[error("point set must be non-empty")]
    EmptySet,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("every bandwidth in the grid has an infinite score")]
    AllScoresInfinite,

    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
