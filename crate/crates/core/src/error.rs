use alloc::boxed::Box;
use alloc::string::String;

use crate::scalar::BisectionState;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid class parameters: {0}")]
    InvalidParams(String),

    /// The oracle produced a non-finite value at the given sample point.
    #[error("oracle failure at grid point {index} (order {order})")]
    OracleFailure { index: usize, order: usize },

    #[error("t = {t} outside [{a}, {b}]")]
    OutOfDomain { t: f64, a: f64, b: f64 },

    /// `|f(s)| < p` observed at `at`.
    #[error("class violation: |f({at})| = {value} < p = {p}")]
    ClassViolation { at: f64, value: f64, p: f64 },

    /// `L*h > ln 2` in strict mode.
    #[error("coarse step too large: L*h = {0} > ln 2")]
    StepTooLarge(f64),

    #[error("need at least {need} trials, got {got}")]
    InsufficientTrials { need: usize, got: usize },

    /// Bisection ran `i* + 1` iterations without meeting `|A| <= 2 eps1`.
    #[error("bisection did not terminate within {} iterations", .0.iter)]
    ContractBreach(Box<BisectionState>),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
