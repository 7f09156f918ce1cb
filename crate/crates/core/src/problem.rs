//! Right-hand sides and problem data.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::math;

/// Right-hand side `f: R^d -> R^d` with exact derivative tensors.
///
/// `derivative(k, y, out)` writes the full order-`k` tensor
/// `d^k f^c / dy_{i1} ... dy_{ik}` in row-major order `[c][i1]...[ik]`, so
/// `out.len() == d^(k+1)`. Order 0 is `f(y)` itself.
///
/// Implementations must be pure: the solvers call them from several
/// threads and assume equal inputs give equal outputs.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, y: &[f64], out: &mut [f64]);

    /// Highest derivative order the oracle can produce.
    fn max_order(&self) -> usize;

    fn derivative(&self, order: usize, y: &[f64], out: &mut [f64]);

    /// Closed-form solution of `z' = f(z)`, `z(0) = eta`, at elapsed time
    /// `t`, when one is known.
    fn exact_solution(&self, _eta: &[f64], _t: f64) -> Option<Vec<f64>> {
        None
    }
}

/// Number of entries of an order-`k` derivative tensor in dimension `d`.
pub fn tensor_len(d: usize, order: usize) -> usize {
    d.pow(order as u32 + 1)
}

/// An initial-value problem `z' = f(z)` on `[a, b]` with `z(a) = eta`.
#[derive(Clone)]
pub struct IvpProblem {
    field: Arc<dyn VectorField>,
    eta: Vec<f64>,
    a: f64,
    b: f64,
}

impl core::fmt::Debug for IvpProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("IvpProblem")
            .field("dim", &self.dim())
            .field("eta", &self.eta)
            .field("a", &self.a)
            .field("b", &self.b)
            .finish()
    }
}

impl IvpProblem {
    /// Checks `a < b`, the dimension of `eta`, `f(eta) != 0`, and that the
    /// order-0 derivative oracle agrees with `eval` at `eta`.
    pub fn new(field: Arc<dyn VectorField>, eta: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        let d = field.dim();
        if d == 0 {
            return Err(Error::arg("dimension must be positive"));
        }
        if eta.len() != d {
            return Err(Error::arg("eta has the wrong dimension"));
        }
        if !(a < b) {
            return Err(Error::arg("interval needs a < b"));
        }
        let mut f0 = vec![0.0; d];
        field.eval(&eta, &mut f0);
        if f0.iter().any(|v| !v.is_finite()) {
            return Err(Error::OracleFailure { index: 0, order: 0 });
        }
        if f0.iter().all(|&v| v == 0.0) {
            return Err(Error::arg("f(eta) must be nonzero"));
        }
        let mut d0 = vec![0.0; d];
        field.derivative(0, &eta, &mut d0);
        let scale = math::norm_inf(&f0).max(1.0);
        if f0.iter().zip(&d0).any(|(x, y)| (x - y).abs() > 64.0 * f64::EPSILON * scale) {
            return Err(Error::arg("derivative oracle of order 0 disagrees with f"));
        }
        Ok(IvpProblem { field, eta, a, b })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn field(&self) -> &Arc<dyn VectorField> {
        &self.field
    }

    pub fn max_order(&self) -> usize {
        self.field.max_order()
    }

    /// `f(y)`, charged as one evaluation.
    pub fn eval(&self, y: &[f64], out: &mut [f64], ledger: &mut CostLedger) {
        ledger.charge_f(1);
        self.field.eval(y, out);
    }

    /// Order-`k` tensor. Order 0 is charged as an evaluation of `f`, higher
    /// orders as one derivative call each regardless of tensor size.
    pub fn derivative(&self, order: usize, y: &[f64], ledger: &mut CostLedger) -> Result<Vec<f64>> {
        if order > self.field.max_order() {
            return Err(Error::arg("derivative order exceeds the oracle"));
        }
        let mut out = vec![0.0; tensor_len(self.dim(), order)];
        if order == 0 {
            ledger.charge_f(1);
            self.field.eval(y, &mut out);
        } else {
            ledger.charge_deriv(1);
            self.field.derivative(order, y, &mut out);
        }
        Ok(out)
    }

    /// Tensors of orders `0..=max_order` at `y`.
    pub fn derivatives(&self, y: &[f64], max_order: usize, ledger: &mut CostLedger) -> Result<Vec<Vec<f64>>> {
        (0..=max_order).map(|k| self.derivative(k, y, ledger)).collect()
    }

    /// Closed-form solution at absolute time `t`, if the field has one.
    pub fn exact(&self, t: f64) -> Option<Vec<f64>> {
        self.field.exact_solution(&self.eta, t - self.a)
    }
}
