//! Oracle-call accounting.
//!
//! Cost is the number of subroutine calls: classical evaluations of `f`,
//! calls to the derivative oracle, and (simulated) quantum queries. Random
//! draws and simulator-only evaluations are recorded for audits but are not
//! part of [`CostLedger::total`].
//!
//! Ledgers are plain counters. Parallel workers keep their own ledger and
//! merge with `+=`; merging is associative and commutative.

use core::ops::{Add, AddAssign, Sub};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostLedger {
    /// Classical evaluations of `f` (including residual-family accesses).
    pub f_evals: u64,
    /// Calls to the derivative oracle for orders `>= 1`, one unit per call.
    pub deriv_evals: u64,
    /// Quantum queries charged by the mean-estimation cost model.
    pub quantum_queries: u64,
    /// Uniform draws taken from the random stream.
    pub rng_draws: u64,
    /// Evaluations the quantum simulator performs to know the true mean.
    /// These stand in for the physical process and are never charged.
    pub sim_evals: u64,
}

impl CostLedger {
    pub const fn new() -> Self {
        CostLedger {
            f_evals: 0,
            deriv_evals: 0,
            quantum_queries: 0,
            rng_draws: 0,
            sim_evals: 0,
        }
    }

    /// Total cost: classical evaluations plus quantum queries.
    pub fn total(&self) -> u64 {
        self.f_evals + self.deriv_evals + self.quantum_queries
    }

    /// Number of classical oracle invocations, i.e. what an instrumented
    /// oracle wrapper would count.
    pub fn oracle_calls(&self) -> u64 {
        self.f_evals + self.deriv_evals + self.sim_evals
    }

    pub fn charge_f(&mut self, n: u64) {
        self.f_evals += n;
    }

    pub fn charge_deriv(&mut self, n: u64) {
        self.deriv_evals += n;
    }

    pub fn charge_queries(&mut self, n: u64) {
        self.quantum_queries += n;
    }

    pub fn charge_draws(&mut self, n: u64) {
        self.rng_draws += n;
    }

    pub fn charge_sim(&mut self, n: u64) {
        self.sim_evals += n;
    }

    /// `self - earlier`, saturating. Counters only grow, so this is the
    /// exact delta between two snapshots of the same ledger.
    pub fn since(&self, earlier: &CostLedger) -> CostLedger {
        CostLedger {
            f_evals: self.f_evals.saturating_sub(earlier.f_evals),
            deriv_evals: self.deriv_evals.saturating_sub(earlier.deriv_evals),
            quantum_queries: self.quantum_queries.saturating_sub(earlier.quantum_queries),
            rng_draws: self.rng_draws.saturating_sub(earlier.rng_draws),
            sim_evals: self.sim_evals.saturating_sub(earlier.sim_evals),
        }
    }
}

impl AddAssign for CostLedger {
    fn add_assign(&mut self, rhs: CostLedger) {
        self.f_evals += rhs.f_evals;
        self.deriv_evals += rhs.deriv_evals;
        self.quantum_queries += rhs.quantum_queries;
        self.rng_draws += rhs.rng_draws;
        self.sim_evals += rhs.sim_evals;
    }
}

impl Add for CostLedger {
    type Output = CostLedger;

    fn add(mut self, rhs: CostLedger) -> CostLedger {
        self += rhs;
        self
    }
}

impl Sub for CostLedger {
    type Output = CostLedger;

    fn sub(self, rhs: CostLedger) -> CostLedger {
        self.since(&rhs)
    }
}

impl core::iter::Sum for CostLedger {
    fn sum<I: Iterator<Item = CostLedger>>(iter: I) -> Self {
        iter.fold(CostLedger::new(), |acc, x| acc + x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_excludes_draws_and_simulation() {
        let mut l = CostLedger::new();
        l.charge_f(3);
        l.charge_deriv(2);
        l.charge_queries(5);
        l.charge_draws(100);
        l.charge_sim(1000);
        assert_eq!(l.total(), 10);
        assert_eq!(l.oracle_calls(), 1005);
    }

    #[test]
    fn merge_is_associative() {
        let a = CostLedger { f_evals: 1, deriv_evals: 2, quantum_queries: 3, rng_draws: 4, sim_evals: 5 };
        let b = CostLedger { f_evals: 10, ..Default::default() };
        let c = CostLedger { quantum_queries: 7, rng_draws: 1, ..Default::default() };
        assert_eq!((a + b) + c, a + (b + c));
        assert_eq!(((a + b) + c).since(&a), b + c);
    }
}
