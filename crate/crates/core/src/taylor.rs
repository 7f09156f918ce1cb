//! Local Taylor expansions, the `w`-polynomials and the normalized residuals.
//!
//! One fine step from `(t0, y)` with width `hbar` uses the derivative tensors
//! of `f` at `y` up to order `r` (one evaluation plus `r` derivative calls).
//! From the same tensors we get
//!
//! - the degree-`r+1` Taylor polynomial of the local flow through `y`, and
//! - `w(y') = sum_{k<=r} (1/k!) f^(k)(y)[(y'-y)^k]`, the degree-`r` Taylor
//!   polynomial of `f` about `y`.
//!
//! `w` composed with the flow polynomial is a univariate polynomial whose
//! integral is computed exactly; only the residual `f - w` along the piece is
//! left for the (possibly randomized) mean estimators.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::holder::HolderParams;
use crate::ledger::CostLedger;
use crate::math;
use crate::problem::{IvpProblem, VectorField};
use crate::tensor;

/// `l(t) = sum_k coeffs[k] (t - base)^k`, valid on `[base, valid_to]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaylorPolynomial {
    pub base: f64,
    pub valid_to: f64,
    pub coeffs: Vec<Vec<f64>>,
}

impl TaylorPolynomial {
    pub fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation at `base + s`.
    pub fn eval_offset_into(&self, s: f64, out: &mut [f64]) {
        let last = self.coeffs.len() - 1;
        out.copy_from_slice(&self.coeffs[last]);
        for c in self.coeffs[..last].iter().rev() {
            for (o, ck) in out.iter_mut().zip(c) {
                *o = *o * s + ck;
            }
        }
    }

    pub fn eval_offset(&self, s: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_offset_into(s, &mut out);
        out
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.eval_offset(t - self.base)
    }
}

/// Degree-`r` Taylor polynomial of `f` about `center`, stored as the
/// derivative tensors of orders `0..=r`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WPolynomial {
    pub center: Vec<f64>,
    pub tensors: Vec<Vec<f64>>,
}

impl WPolynomial {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn order(&self) -> usize {
        self.tensors.len() - 1
    }

    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        let delta: Vec<f64> = y.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let mut out = tensor::taylor_along(&self.tensors, self.dim(), &[delta], 0);
        out.swap_remove(0)
    }
}

/// Taylor coefficients `c_k = z^(k)(t0)/k!`, `k = 0..=order`, of the solution
/// of `z' = f(z)`, `z(t0) = y`, given the derivative tensors of `f` at `y`
/// up to order `order - 1`.
///
/// Uses `c_{k+1} = [f(z(s))]_k / (k+1)`, where `f(z(s))` is expanded through
/// the tensors along `delta(s) = sum_{1<=j<=k} c_j s^j`. This works for any
/// order; it needs no derivative beyond `order - 1`.
pub fn flow_coeffs_from_tensors(tensors: &[Vec<f64>], y: &[f64], order: usize) -> Vec<Vec<f64>> {
    let d = y.len();
    debug_assert!(order == 0 || tensors.len() >= order);
    let mut coeffs = vec![y.to_vec()];
    let mut delta = vec![vec![0.0; d]];
    for k in 0..order {
        let along = tensor::taylor_along(&tensors[..=k], d, &delta, k);
        let next: Vec<f64> = along[k].iter().map(|v| v / (k + 1) as f64).collect();
        delta.push(next.clone());
        coeffs.push(next);
    }
    coeffs
}

/// Local flow coefficients through `y` up to `order`, querying the oracle.
pub fn flow_taylor_coeffs(
    problem: &IvpProblem,
    y: &[f64],
    order: usize,
    ledger: &mut CostLedger,
) -> Result<Vec<Vec<f64>>> {
    if order == 0 {
        return Ok(vec![y.to_vec()]);
    }
    if order - 1 > problem.max_order() {
        return Err(Error::arg("flow order needs derivatives the oracle does not provide"));
    }
    let tensors = problem.derivatives(y, order - 1, ledger)?;
    Ok(flow_coeffs_from_tensors(&tensors, y, order))
}

/// One fine step of Taylor's method of degree `r + 1` from `(t0, y)`.
pub fn taylor_step(
    problem: &IvpProblem,
    y: &[f64],
    t0: f64,
    hbar: f64,
    r: usize,
    ledger: &mut CostLedger,
) -> Result<(TaylorPolynomial, Vec<f64>)> {
    let (piece, _, next) = local_step(problem, y, t0, hbar, r, ledger)?;
    Ok((piece, next))
}

/// Taylor step plus the `w`-polynomial at the same center; both come from
/// one set of oracle calls.
pub fn local_step(
    problem: &IvpProblem,
    y: &[f64],
    t0: f64,
    hbar: f64,
    r: usize,
    ledger: &mut CostLedger,
) -> Result<(TaylorPolynomial, WPolynomial, Vec<f64>)> {
    if !(hbar > 0.0) {
        return Err(Error::arg("step width must be positive"));
    }
    if r > problem.max_order() {
        return Err(Error::arg("smoothness order exceeds the derivative oracle"));
    }
    let tensors = problem.derivatives(y, r, ledger)?;
    let coeffs = flow_coeffs_from_tensors(&tensors, y, r + 1);
    let piece = TaylorPolynomial { base: t0, valid_to: t0 + hbar, coeffs };
    let next = piece.eval_offset(hbar);
    let w = WPolynomial { center: y.to_vec(), tensors };
    Ok((piece, w, next))
}

/// Degree-`r` Taylor polynomial of `f` about `center`.
pub fn build_w(problem: &IvpProblem, center: &[f64], r: usize, ledger: &mut CostLedger) -> Result<WPolynomial> {
    if r > problem.max_order() {
        return Err(Error::arg("smoothness order exceeds the derivative oracle"));
    }
    Ok(WPolynomial { center: center.to_vec(), tensors: problem.derivatives(center, r, ledger)? })
}

/// Exact `int_{t_lo}^{t_hi} w(piece(t)) dt`. No oracle calls.
pub fn integrate_w_along(w: &WPolynomial, piece: &TaylorPolynomial, t_lo: f64, t_hi: f64) -> Vec<f64> {
    let d = w.dim();
    let mut delta = piece.coeffs.clone();
    for (x, c) in delta[0].iter_mut().zip(&w.center) {
        *x -= c;
    }
    let max_deg = w.order() * piece.degree();
    let poly = tensor::taylor_along(&w.tensors, d, &delta, max_deg);
    let lo = t_lo - piece.base;
    let hi = t_hi - piece.base;
    let mut out = vec![0.0; d];
    for c in 0..d {
        // Horner on the antiderivative sum_k p_k s^{k+1}/(k+1)
        let anti = |s: f64| {
            let mut acc = 0.0;
            for (k, pk) in poly.iter().enumerate().rev() {
                acc = acc * s + pk[c] / (k + 1) as f64;
            }
            acc * s
        };
        out[c] = if lo == 0.0 { anti(hi) } else { anti(hi) - anti(lo) };
    }
    out
}

/// `(f(l(z_j + u hbar)) - w(l(z_j + u hbar))) / hbar^exponent`, without
/// charging anything. The caller decides which counter the access hits.
pub(crate) fn residual_into(
    field: &dyn VectorField,
    exponent: f64,
    w: &WPolynomial,
    piece: &TaylorPolynomial,
    hbar: f64,
    u: f64,
    out: &mut [f64],
) {
    let point = piece.eval_offset(u * hbar);
    field.eval(&point, out);
    let wv = w.eval(&point);
    let scale = 1.0 / math::powf(hbar, exponent);
    for (o, wk) in out.iter_mut().zip(wv) {
        *o = (*o - wk) * scale;
    }
}

/// Normalized residual `g(u)` of one fine piece; one evaluation of `f`.
pub fn eval_g(
    problem: &IvpProblem,
    params: &HolderParams,
    w: &WPolynomial,
    piece: &TaylorPolynomial,
    hbar: f64,
    u: f64,
    ledger: &mut CostLedger,
) -> Vec<f64> {
    ledger.charge_f(1);
    let mut out = vec![0.0; problem.dim()];
    residual_into(problem.field().as_ref(), params.exponent(), w, piece, hbar, u, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Constant, Linear, Square};
    use alloc::sync::Arc;
    use approx::assert_relative_eq;

    fn scalar(field: impl VectorField + 'static, eta: f64) -> IvpProblem {
        IvpProblem::new(Arc::new(field), vec![eta], 0.0, 1.0).unwrap()
    }

    #[test]
    fn constant_flow_is_a_line() {
        let p = IvpProblem::new(Arc::new(Constant::new(vec![0.5, -2.0])), vec![1.0, 3.0], 0.0, 1.0).unwrap();
        let mut ledger = CostLedger::new();
        let c = flow_taylor_coeffs(&p, &[1.0, 3.0], 3, &mut ledger).unwrap();
        assert_eq!(c, vec![vec![1.0, 3.0], vec![0.5, -2.0], vec![0.0, 0.0], vec![0.0, 0.0]]);
        // orders 0, 1, 2 of the oracle
        assert_eq!(ledger.f_evals, 1);
        assert_eq!(ledger.deriv_evals, 2);
    }

    #[test]
    fn exponential_flow_coefficients() {
        let p = scalar(Linear::new(1.0), 1.0);
        let c = flow_taylor_coeffs(&p, &[1.0], 2, &mut CostLedger::new()).unwrap();
        assert_eq!(c, vec![vec![1.0], vec![1.0], vec![0.5]]);
    }

    #[test]
    fn square_flow_coefficients() {
        // z = 1/(1-t): all Taylor coefficients are 1
        let p = scalar(Square, 1.0);
        let c = flow_taylor_coeffs(&p, &[1.0], 3, &mut CostLedger::new()).unwrap();
        assert_eq!(c, vec![vec![1.0]; 4]);
    }

    #[test]
    fn order_beyond_oracle_is_rejected() {
        let p = scalar(Square, 1.0);
        assert!(flow_taylor_coeffs(&p, &[1.0], 10, &mut CostLedger::new()).is_err());
    }

    #[test]
    fn taylor_step_examples() {
        let p = scalar(Constant::new(vec![0.75]), 2.0);
        let (_, next) = taylor_step(&p, &[2.0], 0.0, 0.5, 2, &mut CostLedger::new()).unwrap();
        assert_eq!(next, vec![2.0 + 0.75 * 0.5]);

        let p = scalar(Linear::new(1.0), 1.0);
        let (piece, next) = taylor_step(&p, &[1.0], 0.0, 0.1, 1, &mut CostLedger::new()).unwrap();
        assert_relative_eq!(next[0], 1.105, max_relative = 1e-15);
        assert_eq!(piece.degree(), 2);
        assert!(taylor_step(&p, &[1.0], 0.0, 0.0, 1, &mut CostLedger::new()).is_err());
    }

    #[test]
    fn w_examples() {
        let p = scalar(Square, 2.0);
        let w = build_w(&p, &[2.0], 1, &mut CostLedger::new()).unwrap();
        assert_eq!(w.eval(&[2.0]), vec![4.0]);
        assert_eq!(w.eval(&[3.0]), vec![8.0]);
        let w0 = build_w(&p, &[2.0], 0, &mut CostLedger::new()).unwrap();
        assert_eq!(w0.eval(&[10.0]), vec![4.0]);
    }

    #[test]
    fn integrate_examples() {
        let line = |c0: f64, c1: f64, c2: f64| TaylorPolynomial {
            base: 0.0,
            valid_to: 1.0,
            coeffs: vec![vec![c0], vec![c1], vec![c2]],
        };
        let constant = WPolynomial { center: vec![0.3], tensors: vec![vec![2.5]] };
        assert_eq!(integrate_w_along(&constant, &line(1.0, 1.0, 0.0), 0.0, 0.25), vec![2.5 * 0.25]);

        let identity = WPolynomial { center: vec![0.0], tensors: vec![vec![0.0], vec![1.0]] };
        assert_eq!(integrate_w_along(&identity, &line(1.0, 1.0, 0.0), 0.0, 0.5), vec![0.625]);

        let w = WPolynomial { center: vec![2.0], tensors: vec![vec![4.0], vec![4.0]] };
        assert_relative_eq!(
            integrate_w_along(&w, &line(2.0, 0.0, 1.0), 0.0, 1.0)[0],
            16.0 / 3.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn residual_of_constant_field_vanishes() {
        let p = scalar(Constant::new(vec![0.2]), 0.0);
        let params = HolderParams::new(1, 1.0, vec![1.0, 1.0], 1.0).unwrap();
        let mut ledger = CostLedger::new();
        let (piece, w, _) = local_step(&p, &[0.0], 0.0, 0.1, 1, &mut ledger).unwrap();
        for u in [0.0, 0.3, 1.0] {
            assert_eq!(eval_g(&p, &params, &w, &piece, 0.1, u, &mut ledger), vec![0.0]);
        }
        assert_eq!(ledger.f_evals, 1 + 3);
    }

    #[test]
    fn residual_of_linear_field_with_euler_piece() {
        // r = 0: w = f(y_j), piece is the Euler segment, so
        // g(u) = (l(z + u hbar) - l(z)) / hbar and g(1) = f(y_j).
        let p = scalar(Linear::new(1.0), 1.3);
        let params = HolderParams::new(0, 1.0, vec![2.0], 1.0).unwrap();
        let hbar = 0.125;
        let (piece, w, _) = local_step(&p, &[1.3], 0.0, hbar, 0, &mut CostLedger::new()).unwrap();
        let g1 = eval_g(&p, &params, &w, &piece, hbar, 1.0, &mut CostLedger::new());
        assert_relative_eq!(g1[0], 1.3, max_relative = 1e-14);
        let gh = eval_g(&p, &params, &w, &piece, hbar, 0.5, &mut CostLedger::new());
        assert_relative_eq!(gh[0], 0.65, max_relative = 1e-14);
    }
}
