//! Smoothness-class parameters and sample-based membership checks.
//!
//! Norms on `R^d` are max norms throughout.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::problem::IvpProblem;

/// Parameters of the class `F^{r,rho}`: derivative bounds `D_0..D_r`, and
/// the Hölder constant `H` of the order-`r` derivatives. `p`, when present,
/// is the lower bound `|f| >= p` of the scalar autonomous class.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HolderParams {
    pub r: usize,
    pub rho: f64,
    pub d: Vec<f64>,
    pub h: f64,
    pub p: Option<f64>,
}

impl HolderParams {
    pub fn new(r: usize, rho: f64, d: Vec<f64>, h: f64) -> Result<Self> {
        let params = HolderParams { r, rho, d, h, p: None };
        params.check()?;
        Ok(params)
    }

    pub fn with_p(mut self, p: f64) -> Result<Self> {
        self.p = Some(p);
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.into()));
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return bad("rho must lie in (0, 1]");
        }
        if self.r == 0 && self.rho != 1.0 {
            return bad("rho must be 1 when r = 0");
        }
        if self.d.len() != self.r + 1 {
            return Err(Error::InvalidParams(format!("need {} derivative bounds, got {}", self.r + 1, self.d.len())));
        }
        if self.d.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return bad("derivative bounds must be positive");
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad("H must be positive");
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p <= self.d[0]) {
                return bad("p must satisfy 0 < p <= D_0");
            }
        }
        Ok(())
    }

    /// `r + rho`.
    pub fn exponent(&self) -> f64 {
        self.r as f64 + self.rho
    }

    /// Lipschitz constant of `f`: `D_1` if `r >= 1`, else `H`.
    pub fn lipschitz(&self) -> f64 {
        if self.r >= 1 {
            self.d[1]
        } else {
            self.h
        }
    }

    /// Uniform bound on the normalized residuals in dimension `dim`:
    /// `H d^r / r! (gamma D_0)^{r+rho}`, where `gamma D_0 hbar` bounds how
    /// far a local piece moves from its center. For `r = 0` the piece is
    /// the Euler segment with speed `|f(y_j)| <= D_0`, so `gamma = 1`; for
    /// `r >= 1` the piece speed is `D_0` plus higher-order terms and
    /// `gamma = 2` covers them for `hbar` small enough.
    pub fn residual_bound(&self, dim: usize) -> f64 {
        let gamma = if self.r == 0 { 1.0 } else { 2.0 };
        self.h * math::powi(dim as f64, self.r as i32) * math::inv_factorial(self.r)
            * math::powf(gamma * self.d[0], self.exponent())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ViolationKind {
    /// Some entry of the order-`order` tensor exceeds `D_order`.
    Bound { order: usize },
    /// `|T_r(y) - T_r(z)| > H |y - z|^rho` for the grid pair `(point, other)`.
    Holder { other: usize },
    /// `|f| < p`.
    LowerBound,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Violation {
    pub kind: ViolationKind,
    /// Index of the grid point.
    pub point: usize,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub points: usize,
    pub pairs: usize,
    /// Largest observed `value / limit` over all checks.
    pub worst_ratio: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the class bounds on a finite grid. Passing is necessary, not
/// sufficient, for membership: bounds between grid points are not seen.
///
/// A check fails when `value > limit + tol`.
pub fn validate_holder(
    problem: &IvpProblem,
    params: &HolderParams,
    grid: &[Vec<f64>],
    tol: f64,
) -> Result<ValidationReport> {
    if grid.is_empty() {
        return Err(Error::arg("validation grid is empty"));
    }
    if params.r > problem.max_order() {
        return Err(Error::arg("derivative oracle does not reach order r"));
    }
    let dim = problem.dim();
    let field = problem.field();
    let mut report = ValidationReport { points: grid.len(), ..Default::default() };
    let mut top: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    let note = |report: &mut ValidationReport, kind, point, value: f64, limit: f64| {
        let ratio = value / limit;
        if ratio > report.worst_ratio {
            report.worst_ratio = ratio;
        }
        if value > limit + tol {
            report.violations.push(Violation { kind, point, value, limit });
        }
    };
    for (idx, y) in grid.iter().enumerate() {
        if y.len() != dim {
            return Err(Error::arg("grid point has the wrong dimension"));
        }
        for order in 0..=params.r {
            let mut t = vec![0.0; crate::problem::tensor_len(dim, order)];
            if order == 0 {
                field.eval(y, &mut t);
            } else {
                field.derivative(order, y, &mut t);
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::OracleFailure { index: idx, order });
            }
            note(&mut report, ViolationKind::Bound { order }, idx, math::norm_inf(&t), params.d[order]);
            if order == 0 {
                if let Some(p) = params.p {
                    let lo = t.iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
                    // reversed roles: the check is p <= |f|
                    if lo < p - tol {
                        report.violations.push(Violation { kind: ViolationKind::LowerBound, point: idx, value: lo, limit: p });
                    }
                }
            }
            if order == params.r {
                top.push(t);
            }
        }
    }
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let dist = grid[i].iter().zip(&grid[j]).fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
            if dist == 0.0 {
                continue;
            }
            report.pairs += 1;
            let diff = top[i].iter().zip(&top[j]).fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
            note(&mut report, ViolationKind::Holder { other: j }, i, diff, params.h * math::powf(dist, params.rho));
        }
    }
    Ok(report)
}

/// `count` equally spaced scalar points on `[lo, hi]`, as a grid.
pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Vec<Vec<f64>> {
    match count {
        0 => Vec::new(),
        1 => vec![vec![lo]],
        _ => (0..count)
            .map(|k| vec![lo + (hi - lo) * k as f64 / (count - 1) as f64])
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Constant, Linear, Sine};
    use alloc::sync::Arc;

    #[test]
    fn parameter_invariants() {
        assert!(HolderParams::new(0, 0.5, vec![1.0], 1.0).is_err());
        assert!(HolderParams::new(1, 0.5, vec![1.0], 1.0).is_err());
        assert!(HolderParams::new(1, 0.0, vec![1.0, 1.0], 1.0).is_err());
        assert!(HolderParams::new(1, 1.0, vec![1.0, -1.0], 1.0).is_err());
        assert!(HolderParams::new(0, 1.0, vec![1.0], 0.0).is_err());
        let p = HolderParams::new(0, 1.0, vec![1.0], 2.0).unwrap();
        assert!(p.clone().with_p(1.5).is_err());
        assert!(p.clone().with_p(0.5).is_ok());
        assert_eq!(p.lipschitz(), 2.0);
        assert_eq!(HolderParams::new(1, 0.5, vec![1.0, 3.0], 2.0).unwrap().lipschitz(), 3.0);
    }

    #[test]
    fn sine_passes_on_uniform_grid() {
        let problem = IvpProblem::new(Arc::new(Sine), vec![1.0], 0.0, 1.0).unwrap();
        let params = HolderParams::new(1, 1.0, vec![1.0, 1.0], 1.0).unwrap();
        let report = validate_holder(&problem, &params, &uniform_grid(-3.0, 3.0, 101), 1e-12).unwrap();
        assert!(report.passed(), "{:?}", report.violations);
        assert_eq!(report.pairs, 5050);
    }

    #[test]
    fn doubling_map_violates_sup_bound_at_one() {
        let problem = IvpProblem::new(Arc::new(Linear::new(2.0)), vec![1.0], 0.0, 1.0).unwrap();
        let params = HolderParams::new(0, 1.0, vec![1.0], 2.0).unwrap();
        let report = validate_holder(&problem, &params, &[vec![0.25], vec![1.0]], 0.0).unwrap();
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.kind, ViolationKind::Bound { order: 0 });
        assert_eq!(v.point, 1);
        assert_eq!(v.value, 2.0);
    }

    #[test]
    fn constant_passes_any_order() {
        let problem = IvpProblem::new(Arc::new(Constant::new(vec![0.7])), vec![0.0], 0.0, 1.0).unwrap();
        for r in 0..3 {
            let rho = if r == 0 { 1.0 } else { 0.3 };
            let params = HolderParams::new(r, rho, vec![0.7; r + 1], 1e-3).unwrap();
            assert!(validate_holder(&problem, &params, &uniform_grid(-5.0, 5.0, 21), 0.0).unwrap().passed());
        }
    }

    #[test]
    fn empty_grid_is_rejected() {
        let problem = IvpProblem::new(Arc::new(Sine), vec![1.0], 0.0, 1.0).unwrap();
        let params = HolderParams::new(1, 1.0, vec![1.0, 1.0], 1.0).unwrap();
        assert!(validate_holder(&problem, &params, &[], 0.0).is_err());
    }
}
