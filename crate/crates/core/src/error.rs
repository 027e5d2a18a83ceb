use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("message of {len} bits exceeds the {budget}-bit budget in round {round}")]
    BudgetExceeded { round: usize, len: usize, budget: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid reduction: batch size {kappa} exceeds the {m} available instances")]
    InvalidReduction { kappa: usize, m: usize },

    #[error("enumeration of {size} input sequences exceeds the cap of {cap}")]
    EnumerationTooLarge { size: u128, cap: u128 },

    #[error("rho = {rho} outside the admissible range (max {max}) for {bound}")]
    RhoOutOfRange { rho: f64, max: f64, bound: &'static str },

    #[error("a {budget}-bit budget cannot hold a single counter (needs at least {needed} bits)")]
    BudgetTooSmall { budget: usize, needed: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("log bases differ between the two distributions")]
    BaseMismatch,

    #[error("q vanishes at an outcome where p is positive")]
    DivisionByZeroSupport,

    #[error("the Z axes are not mutually independent (max deviation {0:e})")]
    NotIndependent(f64),

    #[error("message alphabet of size {size} exceeds 2^{bits}")]
    AlphabetTooLarge { size: usize, bits: usize },

    #[error("likelihood ratio p/q is unbounded")]
    UnboundedRatio,

    #[error("target success {target} not bracketed: success {at_lo} at m={m_lo}, {at_hi} at m={m_hi}")]
    TargetNotBracketed { target: f64, m_lo: usize, at_lo: f64, m_hi: usize, at_hi: f64 },

    #[error("{context}: {source}")]
    Trial { context: String, source: Box<Error> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn in_trial(self, context: String) -> Self {
        Error::Trial { context, source: Box::new(self) }
    }
}
