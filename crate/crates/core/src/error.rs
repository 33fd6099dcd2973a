use thiserror::Error;

/// Errors raised by the library. State indices are stored zero-based and
/// displayed one-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry at ({}, {})", .row + 1, .col + 1)]
    NonFinite { row: usize, col: usize },

    #[error("matrix is singular to working precision at pivot step {} (|pivot| = {pivot:e})", .step + 1)]
    Singular { step: usize, pivot: f64 },

    #[error("matrix exponential overflowed")]
    Overflow,

    #[error("negative off-diagonal rate {value} at ({}, {})", .row + 1, .col + 1)]
    NegativeRate { row: usize, col: usize, value: f64 },

    #[error("{kind} {} sums to {sum:e}, expected 0", .index + 1)]
    NonzeroSum { kind: &'static str, index: usize, sum: f64 },

    #[error("generator is reducible: state {} cannot reach state {}", .from + 1, .to + 1)]
    Reducible { from: usize, to: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("time {t} outside horizon [0, {horizon}]")]
    OutsideHorizon { t: f64, horizon: f64 },

    #[error("ergodic variance is negative ({0:e})")]
    NegativeVariance(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
