//! Experiment runner for the `ivp-core` solvers: fixtures, convergence
//! ladders, log-log slope fits and deterministic reports.
//!
//! Costs are ledger totals (classical evaluations plus simulated quantum
//! queries). Quantum-sim costs follow the modeled query law of the
//! simulator; nothing here executes on quantum hardware.

pub mod fixtures;
pub mod ladder;
pub mod report;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] ivp_core::Error),

    #[error("unknown fixture `{0}` (not a builtin id and not a readable file)")]
    UnknownFixture(String),

    #[error("fixture `{0}` has no reference solution")]
    NoReference(String),

    #[error("invalid fixture: {0}")]
    Fixture(String),

    #[error("invalid plan: {0}")]
    Plan(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
