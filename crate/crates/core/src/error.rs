use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain size must be at least 2, got {0}")]
    BadLength(usize),

    #[error("entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },

    #[error("entries sum to {sum}, expected 1")]
    BadSum { sum: f64 },

    #[error("entry {index} is not finite")]
    NonFinite { index: usize },

    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),

    #[error("truth probability p={p} is invalid for k={k} (need 1/k < p <= 1)")]
    BadTruthProbability { p: f64, k: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("category {value} out of range for k={k}")]
    CategoryOutOfRange { value: usize, k: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("channel matrix for k={k} exceeds the {limit}x{limit} guard")]
    ChannelTooLarge { k: usize, limit: usize },

    #[error("KL divergence is infinite: phi[{index}] > 0 but model[{index}] = 0")]
    InfiniteDivergence { index: usize },

    #[error("oracle supports k <= {max}, got {k}")]
    OracleDimension { k: usize, max: usize },

    #[error("lattice with k={k}, resolution={resolution} has {points} points (guard {limit})")]
    GridTooLarge {
        k: usize,
        resolution: usize,
        points: u128,
        limit: u128,
    },

    #[error("negative count {value} on line {line}")]
    NegativeCount { value: i64, line: usize },

    #[error("histogram has zero total count")]
    ZeroTotal,

    #[error("a probability histogram needs an explicit sample size n")]
    MissingSampleSize,

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid sweep configuration: {0}")]
    Config(String),

    #[error("estimator produced an entry of {value} at index {index}")]
    InvalidEstimate { index: usize, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
