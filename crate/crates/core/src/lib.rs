//! Two-level Taylor integrators for autonomous initial-value problems
//! `z'(t) = f(z(t))`, `z(a) = eta`, in three settings:
//!
//! - **deterministic**: Taylor's method on a fine mesh, the residual integral
//!   approximated by the full composite midpoint rule;
//! - **randomized**: the midpoint mean replaced by a Monte Carlo estimate;
//! - **quantum-sim**: the midpoint mean replaced by a cost-accounted stand-in
//!   for quantum mean estimation (`min{s, 1/eps}` queries, 3/4 success).
//!
//! Every oracle call is charged to a [`CostLedger`], so cost-versus-error
//! experiments measure the same unit as the complexity bounds.
//!
//! The crate also carries the bisection solver for scalar autonomous problems
//! ([`scalar`]) and the planted bump construction that encodes a hidden mean
//! in the endpoint value of a scalar flow ([`adversary`]).
//!
//! The crate is `no_std` (it needs `alloc`); IO, file formats and the CLI
//! live in `ivp-bench`.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod adversary;
mod error;
pub mod estimators;
pub mod fields;
pub mod holder;
pub mod ledger;
pub mod mesh;
pub mod piecewise;
pub mod problem;
pub mod reference;
pub mod rng;
pub mod scalar;
pub mod series;
pub mod solver;
pub mod taylor;
mod tensor;

pub(crate) mod math;

pub use error::{Error, Result};
pub use estimators::{
    choose_k, full_mean, mc_mean, median_boost, quantum_sim_mean, IndexedFamily, MeanEstimate,
    MeanEstimator,
};
pub use holder::{validate_holder, HolderParams, ValidationReport, Violation};
pub use ledger::CostLedger;
pub use mesh::TwoLevelMesh;
pub use piecewise::PiecewiseTaylorApprox;
pub use problem::{IvpProblem, VectorField};
pub use solver::{
    estimate_quant_error, estimate_rand_error, eval_approx, solve, sup_error, Mode, SolveConfig,
    SolveResult,
};
pub use taylor::{TaylorPolynomial, WPolynomial};
