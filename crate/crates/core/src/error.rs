use thiserror::Error;

use crate::transition::ValidationReport;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid letter: {0}")]
    InvalidLetter(String),

    #[error("{head} is not a child of {tail} in the left-Cayley tree")]
    InvalidPair { head: String, tail: String },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("rank {rank} is not supported here (need rank >= {min})")]
    UnsupportedRank { rank: usize, min: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("systems are defined over different groups")]
    MismatchedSpec,

    #[error("pair marginals inconsistent with pi: generator {generator}, state {state}, residual {residual:e}")]
    InconsistentMarginals {
        generator: String,
        state: usize,
        residual: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("transition system is not invariant:\n{0}")]
    InvalidSystem(ValidationReport),

    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("distribution sums to {0}, not 1")]
    NotNormalized(f64),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
