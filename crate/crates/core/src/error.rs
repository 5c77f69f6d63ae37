use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by kernel construction, sampling, coreset search and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel is not positive semidefinite: {0}")]
    NotPsd(String),

    #[error("kernel is not symmetric: |L[{i}][{j}] - L[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },

    #[error("invalid bandwidth {0} (must be finite and > 0)")]
    InvalidBandwidth(f64),

    #[error("cardinality k = {k} out of range for ground set of size {n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("index {index} out of range for ground set of size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate index {0} in subset")]
    DuplicateIndex(usize),

    #[error("pivot {pivot:e} at index {index} is numerically singular")]
    SingularPivot { index: usize, pivot: f64 },

    #[error("negative radicand {0:e} in kernel distance (kernel not PSD)")]
    NegativeRadicand(f64),

    #[error("degenerate k-DPP: e_k = {0:e} (kernel rank below k?)")]
    DegenerateModel(f64),

    #[error("subset has {got} items, expected {expected}")]
    WrongCardinality { expected: usize, got: usize },

    #[error("requested {parts} parts for a ground set of {n} items")]
    TooManyParts { parts: usize, n: usize },

    #[error("enumeration of {count} terms exceeds budget {budget}")]
    EnumerationTooLarge { count: u128, budget: u128 },

    #[error("conditional variance {0:e} is degenerate (k-DPP positivity assumption violated)")]
    DegenerateConditional(f64),

    #[error("need at least 2 chains of length >= 10 (got {chains} chains, min length {len})")]
    InsufficientChains { chains: usize, len: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 1 usage, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidBandwidth(_)
            | Error::KOutOfRange { .. }
            | Error::TooManyParts { .. }
            | Error::InvalidInput(_)
            | Error::WrongCardinality { .. }
            | Error::InsufficientChains { .. } => 1,
            Error::Parse { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::IndexOutOfRange { .. }
            | Error::DuplicateIndex(_)
            | Error::InvalidPartition(_)
            | Error::NotSymmetric { .. }
            | Error::EnumerationTooLarge { .. } => 2,
            Error::NotPsd(_)
            | Error::SingularPivot { .. }
            | Error::NegativeRadicand(_)
            | Error::DegenerateModel(_)
            | Error::DegenerateConditional(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
