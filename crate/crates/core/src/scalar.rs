//! Scalar autonomous problems with `|f| >= p`: `z(b)` is the root of
//!
//! ```text
//! H(y) = int_eta^y ds / f(s) - (b - a),
//! ```
//!
//! found by bisection driven by noisy estimates of `H`.
//!
//! `H` is estimated with a Taylor control variate: `[eta, y]` is split into
//! `l` cells, the degree-`r` Taylor polynomial of `phi = 1/f` at each cell's
//! left end is integrated exactly, and only the normalized residuals
//! `(phi - T_c)/Delta^{r+rho}` at `N` midpoints per cell go to a mean
//! estimator. `l` and `N` are chosen from `eps1` so that the midpoint bias
//! is at most `eps1/4` and the estimator cost balances the cell count.

use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::estimators::{
    choose_k, median_boost, Backend, FamilySummary, FullMean, IndexedFamily, MonteCarlo, QuantumSim, SummaryCache,
};
use crate::holder::HolderParams;
use crate::ledger::CostLedger;
use crate::math;
use crate::problem::{IvpProblem, VectorField};
use crate::series;
use crate::solver::Mode;

/// Which half of the bracket a bisection step kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Side {
    Lower,
    Upper,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BisectionStep {
    pub y: f64,
    pub a: f64,
    pub side: Side,
    pub cost: CostLedger,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BisectionState {
    pub lo: f64,
    pub hi: f64,
    pub iter: usize,
    pub history: Vec<BisectionStep>,
}

/// Configuration of the integral subroutine.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegralEstimator {
    pub mode: Mode,
    pub mc_calibration: f64,
    pub c_q: f64,
    /// Overrides the cell count `l`.
    pub cells: Option<usize>,
    /// Overrides the midpoints per cell `N`.
    pub samples: Option<usize>,
    /// Overrides the residual bound `M~` (required for `r >= 2`).
    pub residual_bound: Option<f64>,
    /// Overrides the Hölder constant `H~` of `(1/f)^(r)` (required for
    /// `r >= 2`).
    pub holder_bound: Option<f64>,
}

impl IntegralEstimator {
    pub fn new(mode: Mode) -> Self {
        IntegralEstimator {
            mode,
            mc_calibration: 2.0,
            c_q: 1.0,
            cells: None,
            samples: None,
            residual_bound: None,
            holder_bound: None,
        }
    }
}

/// Hölder constant `H~` of `(1/f)^(r)` over intervals of length at most
/// `width`, and the residual bound `M~ = H~ / r!`.
///
/// - `r = 0`: `|1/f(s) - 1/f(t)| <= H |s-t| / p^2`.
/// - `r = 1`: `(1/f)' = -f'/f^2`, and
///   `|f'(s)/f(s)^2 - f'(t)/f(t)^2| <= (H/p^2 + 2 D_1^2 width^{1-rho}/p^3) |s-t|^rho`.
pub fn reciprocal_bounds(params: &HolderParams, width: f64, est: &IntegralEstimator) -> Result<(f64, f64)> {
    let p = params.p.ok_or_else(|| Error::InvalidParams("scalar class needs p".into()))?;
    let htilde = match (est.holder_bound, params.r) {
        (Some(h), _) => h,
        (None, 0) => params.h / (p * p),
        (None, 1) => {
            params.h / (p * p) + 2.0 * params.d[1] * params.d[1] * math::powf(width, 1.0 - params.rho) / (p * p * p)
        }
        (None, _) => return Err(Error::arg("r >= 2 needs explicit bounds for 1/f")),
    };
    let mtilde = est.residual_bound.unwrap_or(htilde * math::inv_factorial(params.r));
    Ok((htilde, mtilde))
}

/// Cell count and midpoints per cell for tolerance `eps1` on an interval of
/// length `width`.
pub fn discretization(params: &HolderParams, width: f64, eps1: f64, est: &IntegralEstimator) -> Result<(usize, usize)> {
    let (htilde, mtilde) = reciprocal_bounds(params, width, est)?;
    let e = params.exponent();
    let span = math::powf(width, e + 1.0);
    let cells = est.cells.unwrap_or_else(|| {
        let l = match est.mode {
            Mode::Deterministic => math::powf(span * htilde / (4.0 * eps1), 1.0 / e),
            Mode::Randomized => math::powf(4.0 * mtilde * span / eps1, 1.0 / (e + 0.5)),
            Mode::QuantumSim => math::powf(4.0 * est.c_q * mtilde * span / (3.0 * eps1), 1.0 / (e + 1.0)),
        };
        (math::ceil(l) as usize).max(1)
    });
    let samples = est.samples.unwrap_or_else(|| match est.mode {
        Mode::Deterministic => 1,
        _ => {
            let scale = span * math::powi(cells as f64, -(params.r as i32)) / math::powf(cells as f64, params.rho);
            (math::ceil(scale * htilde / eps1) as usize).max(1)
        }
    });
    Ok((cells, samples))
}

/// Normalized residuals of `1/f` over the cells, item `k = c N + q`.
struct CellFamily<'a> {
    field: &'a dyn VectorField,
    lo: f64,
    width: f64,
    step: f64,
    cells: usize,
    samples: usize,
    jets: Vec<Vec<f64>>,
    norm: f64,
    bound: f64,
    cache: SummaryCache,
}

impl CellFamily<'_> {
    fn left(&self, c: usize) -> f64 {
        if c == self.cells {
            self.lo + self.width
        } else {
            self.lo + c as f64 * self.step
        }
    }
}

impl IndexedFamily for CellFamily<'_> {
    fn len(&self) -> usize {
        self.cells * self.samples
    }

    fn dim(&self) -> usize {
        1
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn value(&self, k: usize, out: &mut [f64]) {
        let c = k / self.samples;
        let q = k % self.samples;
        let off = (q as f64 + 0.5) / self.samples as f64 * self.step;
        let mut f = [0.0];
        self.field.eval(&[self.left(c) + off], &mut f);
        out[0] = (1.0 / f[0] - series::eval(&self.jets[c], off)) * self.norm;
    }

    fn summary(&self, ledger: &mut CostLedger) -> FamilySummary {
        self.cache.get(self, ledger)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegralEstimate {
    /// Estimate of `H(y)`.
    pub value: f64,
    pub cost: CostLedger,
    /// Part of `cost` spent on the exact Taylor integrals.
    pub deterministic_cost: CostLedger,
    pub cells: usize,
    pub samples: usize,
    pub bound: f64,
    /// Base-estimator runs behind the mean (1 if exact).
    pub repetitions: usize,
}

/// Estimate of `H(y)`; with `k = 1` it is within `eps1` with probability at
/// least 3/4 (exactly, up to rounding, in deterministic mode). The mean is
/// median-boosted over `k` runs; the Taylor integrals are computed once.
pub fn estimate_h(
    problem: &IvpProblem,
    params: &HolderParams,
    y: f64,
    eps1: f64,
    est: &IntegralEstimator,
    k: usize,
    rng: &mut dyn RngCore,
) -> Result<IntegralEstimate> {
    if problem.dim() != 1 {
        return Err(Error::arg("scalar solver needs d = 1"));
    }
    if !(eps1 > 0.0) {
        return Err(Error::arg("eps1 must be positive"));
    }
    if params.r > problem.max_order() {
        return Err(Error::arg("derivative oracle does not reach order r"));
    }
    let p = params.p.ok_or_else(|| Error::InvalidParams("scalar class needs p".into()))?;
    let (a, b) = problem.interval();
    let eta = problem.eta()[0];
    let (lo, hi, sign) = if y >= eta { (eta, y, 1.0) } else { (y, eta, -1.0) };
    let width = hi - lo;
    let mut cost = CostLedger::new();
    if width == 0.0 {
        return Ok(IntegralEstimate {
            value: -(b - a),
            cost,
            deterministic_cost: cost,
            cells: 0,
            samples: 0,
            bound: 0.0,
            repetitions: 1,
        });
    }
    let (_, mtilde) = reciprocal_bounds(params, width, est)?;
    let (cells, samples) = discretization(params, width, eps1, est)?;
    let step = width / cells as f64;
    let mut jets = Vec::with_capacity(cells);
    let mut exact = 0.0;
    for c in 0..cells {
        let s = lo + c as f64 * step;
        let derivs = problem.derivatives(&[s], params.r, &mut cost)?;
        let f0 = derivs[0][0];
        if !(f0.abs() >= p) {
            return Err(Error::ClassViolation { at: s, value: f0.abs(), p });
        }
        let jet: Vec<f64> = derivs.iter().map(|t| t[0]).collect();
        let phi = series::recip(&series::from_derivatives(&jet));
        exact += series::integrate(&phi, step);
        jets.push(phi);
    }
    let deterministic_cost = cost;
    let family = CellFamily {
        field: problem.field().as_ref(),
        lo,
        width,
        step,
        cells,
        samples,
        jets,
        norm: 1.0 / math::powf(step, params.exponent()),
        bound: mtilde,
        cache: SummaryCache::new(),
    };
    // S * mean(g) approximates the residual integral
    let scale = width * math::powf(step, params.exponent());
    let backend = match est.mode {
        Mode::Deterministic => Backend::Full(FullMean),
        Mode::Randomized => {
            Backend::MonteCarlo(MonteCarlo { eps1: eps1 / (2.0 * scale), calibration: est.mc_calibration })
        }
        Mode::QuantumSim => Backend::Quantum(QuantumSim { eps1: 3.0 * eps1 / (4.0 * scale), c_q: est.c_q }),
    };
    let mean = median_boost(&backend, &family, k, rng)?;
    cost += mean.cost;
    let repetitions = if mean.is_exact() { 1 } else { k };
    Ok(IntegralEstimate {
        value: sign * (exact + scale * mean.value[0]) - (b - a),
        cost,
        deterministic_cost,
        cells,
        samples,
        bound: mtilde,
        repetitions,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BisectionOutcome {
    pub y: f64,
    pub iters: usize,
    pub cost: CostLedger,
    pub eps1: f64,
    /// Iteration budget `ceil(log2(D_0 (b-a) / (p eps1)))`.
    pub max_iters: usize,
    pub median_k: usize,
    pub state: BisectionState,
}

impl BisectionOutcome {
    /// Total cost per unboosted call of the integral subroutine.
    pub fn cost_per_call(&self) -> f64 {
        self.cost.total() as f64 / (self.iters * self.median_k) as f64
    }
}

/// `ceil(log2(D_0 (b - a) / (p eps1)))`, at least 1.
pub fn iteration_budget(params: &HolderParams, length: f64, eps1: f64) -> Result<usize> {
    let p = params.p.ok_or_else(|| Error::InvalidParams("scalar class needs p".into()))?;
    let ratio = params.d[0] * length / (p * eps1);
    Ok((math::ceil(math::log2(ratio)).max(1.0)) as usize)
}

/// Bisection for `z(b)` to accuracy `eps` with probability `1 - delta`.
///
/// `eps1 = eps / (3 D_0)`; the bracket starts as `[eta, eta + D_0 (b-a)]`
/// (mirrored when `f(eta) < 0`); each estimate is boosted to success
/// `(1 - delta)^{1/(i*+1)}`; the loop stops at the first `|A| <= 2 eps1`.
pub fn bisection_solve(
    problem: &IvpProblem,
    params: &HolderParams,
    eps: f64,
    delta: f64,
    est: &IntegralEstimator,
    rng: &mut dyn RngCore,
) -> Result<BisectionOutcome> {
    if problem.dim() != 1 {
        return Err(Error::arg("scalar solver needs d = 1"));
    }
    if !(eps > 0.0) {
        return Err(Error::arg("eps must be positive"));
    }
    let d0 = params.d[0];
    let (a, b) = problem.interval();
    let eps1 = eps / (3.0 * d0);
    let max_iters = iteration_budget(params, b - a, eps1)?;
    let median_k = match est.mode {
        Mode::Deterministic => 1,
        _ => choose_k(max_iters, delta)?,
    };
    let eta = problem.eta()[0];
    let mut cost = CostLedger::new();
    let mut f0 = [0.0];
    problem.eval(&[eta], &mut f0, &mut cost);
    let sign = if f0[0] < 0.0 { -1.0 } else { 1.0 };
    let reach = d0 * (b - a);
    let (lo, hi) = if sign > 0.0 { (eta, eta + reach) } else { (eta - reach, eta) };
    let mut state = BisectionState { lo, hi, iter: 0, history: Vec::new() };
    loop {
        let y = 0.5 * (state.lo + state.hi);
        let e = estimate_h(problem, params, y, eps1, est, median_k, rng)?;
        cost += e.cost;
        state.iter += 1;
        let side = if e.value.abs() <= 2.0 * eps1 {
            Side::Stop
        } else if e.value * sign > 0.0 {
            Side::Lower
        } else {
            Side::Upper
        };
        state.history.push(BisectionStep { y, a: e.value, side, cost: e.cost });
        match side {
            Side::Stop => {
                return Ok(BisectionOutcome { y, iters: state.iter, cost, eps1, max_iters, median_k, state });
            }
            Side::Lower => state.hi = y,
            Side::Upper => state.lo = y,
        }
        if state.iter >= max_iters {
            return Err(Error::ContractBreach(alloc::boxed::Box::new(state)));
        }
    }
}
