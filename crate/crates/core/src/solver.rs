//! The two-level solvers.
//!
//! Coarse step `i` runs `m` chained Taylor steps of width `hbar` from `y_i`,
//! integrates the `w`-polynomials along the pieces exactly, and corrects
//! with the mean `A_i` of the `s = m N` normalized residuals at the midpoint
//! nodes `u_k = (k + 1/2)/N`:
//!
//! ```text
//! y_{i+1} = y_i + sum_j int w_ij(l_ij(t)) dt + m hbar^{r+rho+1} A_i
//! ```
//!
//! `A_i` is the exact mean (deterministic), a Monte Carlo estimate
//! (randomized) or the quantum cost-model estimate (quantum-sim); the
//! stochastic ones are median-boosted so that all `n` steps succeed together
//! with probability `1 - delta`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimators::{
    median_boost, vector_k, Backend, FamilySummary, FullMean, IndexedFamily, MedianBoost, MonteCarlo,
    QuantumSim, SummaryCache,
};
use crate::holder::HolderParams;
use crate::ledger::CostLedger;
use crate::math;
use crate::mesh::TwoLevelMesh;
use crate::piecewise::PiecewiseTaylorApprox;
use crate::problem::{IvpProblem, VectorField};
use crate::rng;
use crate::taylor::{self, TaylorPolynomial, WPolynomial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mode {
    Deterministic,
    Randomized,
    QuantumSim,
}

impl Mode {
    pub fn is_stochastic(self) -> bool {
        self != Mode::Deterministic
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveConfig {
    pub mode: Mode,
    pub n: usize,
    pub m: usize,
    /// Midpoint nodes per fine interval.
    pub samples: usize,
    pub eps1: f64,
    pub delta: f64,
    pub seed: u64,
    pub stream: u64,
    /// Median count; `None` means `choose_k(n, delta)` in stochastic modes.
    pub median_k: Option<usize>,
    /// Extra per-component median repetitions when `d > 1`.
    pub vector_boost: bool,
    pub mc_calibration: f64,
    pub c_q: f64,
    /// Overrides [`HolderParams::residual_bound`].
    pub residual_bound: Option<f64>,
    /// Turn the `L h <= ln 2` warning into an error.
    pub strict: bool,
    /// Record, per step, whether `A_i` was within `eps1` of the exact mean.
    /// The exact mean is computed off the books.
    pub track_events: bool,
}

impl SolveConfig {
    pub fn deterministic(n: usize, m: usize, samples: usize) -> Self {
        SolveConfig {
            mode: Mode::Deterministic,
            n,
            m,
            samples,
            eps1: 0.0,
            delta: 0.25,
            seed: 0,
            stream: 0,
            median_k: None,
            vector_boost: true,
            mc_calibration: 2.0,
            c_q: 1.0,
            residual_bound: None,
            strict: false,
            track_events: false,
        }
    }

    /// `m = n^2`, `N = n^2`, `eps1 = 1/n`.
    pub fn randomized(n: usize) -> Self {
        SolveConfig { mode: Mode::Randomized, eps1: 1.0 / n as f64, ..Self::deterministic(n, n * n, n * n) }
    }

    /// `m = n`, `N = n`, `eps1 = 1/n`.
    pub fn quantum(n: usize) -> Self {
        SolveConfig { mode: Mode::QuantumSim, eps1: 1.0 / n as f64, ..Self::deterministic(n, n, n) }
    }

    pub fn with_mode_defaults(mode: Mode, n: usize) -> Self {
        match mode {
            Mode::Deterministic => Self::deterministic(n, n, 1),
            Mode::Randomized => Self::randomized(n),
            Mode::QuantumSim => Self::quantum(n),
        }
    }

    pub fn seeded(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// The same configuration on random stream `t`.
    pub fn trial(&self, t: u64) -> Self {
        SolveConfig { stream: t, ..self.clone() }
    }

    fn check(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::arg("need at least one midpoint node"));
        }
        if self.mode.is_stochastic() && !(self.eps1 > 0.0) {
            return Err(Error::arg("eps1 must be positive in stochastic modes"));
        }
        if let Some(k) = self.median_k {
            if k == 0 || k % 2 == 0 {
                return Err(Error::arg("median count k must be odd"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Warning {
    /// `L h` exceeds `ln 2`.
    StepTooLarge { lh: f64 },
    /// The pieces of step `step` move far enough that the residuals may
    /// exceed the bound used by the estimators.
    ResidualBound { step: usize, bound: f64, needed: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepRecord {
    pub estimate: Vec<f64>,
    /// Charged to the mean estimation of this step.
    pub cost: CostLedger,
    /// Number of base-estimator runs behind `estimate` (1 if exact).
    pub repetitions: usize,
    /// Exact mean of the residual family, when tracked.
    pub exact_mean: Option<Vec<f64>>,
    /// `|estimate - exact_mean| <= eps1` in every component, when tracked.
    pub within_eps: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveResult {
    pub approx: PiecewiseTaylorApprox,
    pub y_grid: Vec<Vec<f64>>,
    pub ledger: CostLedger,
    /// Taylor steps and `w`-polynomials.
    pub deterministic_cost: CostLedger,
    /// Mean estimation.
    pub stochastic_cost: CostLedger,
    pub steps: Vec<StepRecord>,
    pub warnings: Vec<Warning>,
    pub config: SolveConfig,
    pub median_k: usize,
    pub vector_k: usize,
    pub residual_bound: f64,
}

impl SolveResult {
    /// Cost with the median repetitions divided out of every stochastic
    /// step: what one unboosted run of the algorithm would have paid.
    pub fn deflated_cost(&self) -> f64 {
        let stochastic: f64 = self.steps.iter().map(|s| s.cost.total() as f64 / s.repetitions as f64).sum();
        self.deterministic_cost.total() as f64 + stochastic
    }

    /// Whether every step's estimate was within `eps1`; `None` unless
    /// events were tracked.
    pub fn all_within_eps(&self) -> Option<bool> {
        self.steps.iter().map(|s| s.within_eps).try_fold(true, |acc, w| w.map(|w| acc && w))
    }
}

/// Residuals `g_j(u_q)` of one coarse step, item `k = j N + q`.
struct ResidualFamily<'a> {
    field: &'a dyn VectorField,
    pieces: &'a [TaylorPolynomial],
    ws: &'a [WPolynomial],
    hbar: f64,
    exponent: f64,
    samples: usize,
    bound: f64,
    cache: SummaryCache,
}

impl IndexedFamily for ResidualFamily<'_> {
    fn len(&self) -> usize {
        self.pieces.len() * self.samples
    }

    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn value(&self, k: usize, out: &mut [f64]) {
        let j = k / self.samples;
        let q = k % self.samples;
        let u = (q as f64 + 0.5) / self.samples as f64;
        taylor::residual_into(self.field, self.exponent, &self.ws[j], &self.pieces[j], self.hbar, u, out);
    }

    fn summary(&self, ledger: &mut CostLedger) -> FamilySummary {
        self.cache.get(self, ledger)
    }
}

/// Runs the solver selected by `config.mode`.
pub fn solve(problem: &IvpProblem, params: &HolderParams, config: &SolveConfig) -> Result<SolveResult> {
    config.check()?;
    if params.r > problem.max_order() {
        return Err(Error::arg("derivative oracle does not reach order r"));
    }
    let (a, b) = problem.interval();
    let mesh = TwoLevelMesh::new(a, b, config.n, config.m)?;
    let d = problem.dim();
    let mut warnings = Vec::new();
    let lh = params.lipschitz() * mesh.h;
    if lh > core::f64::consts::LN_2 {
        if config.strict {
            return Err(Error::StepTooLarge(lh));
        }
        warnings.push(Warning::StepTooLarge { lh });
    }
    let bound = config.residual_bound.unwrap_or_else(|| params.residual_bound(d));
    let median_k = match (config.mode, config.median_k) {
        (Mode::Deterministic, _) => 1,
        (_, Some(k)) => k,
        (_, None) => crate::estimators::choose_k(config.n, config.delta)?,
    };
    let vk = if config.mode.is_stochastic() && config.vector_boost { vector_k(d) } else { 1 };
    let backend = match config.mode {
        Mode::Deterministic => Backend::Full(FullMean),
        Mode::Randomized => Backend::MonteCarlo(MonteCarlo { eps1: config.eps1, calibration: config.mc_calibration }),
        Mode::QuantumSim => Backend::Quantum(QuantumSim { eps1: config.eps1, c_q: config.c_q }),
    };
    let mut rng = rng::stream(config.seed, config.stream);
    let exponent = params.exponent();
    let hbar = mesh.hbar;
    let scale = config.m as f64 * math::powf(hbar, exponent + 1.0);
    // r = 0 pieces are Euler segments: speed |f(y_j)|, no slack needed
    let gamma_needed = |pieces: &[TaylorPolynomial]| {
        pieces
            .iter()
            .map(|p| {
                let mut mv = 0.0;
                let mut hp = 1.0;
                for c in &p.coeffs[1..] {
                    mv += math::norm_inf(c) * hp;
                    hp *= hbar;
                }
                mv
            })
            .fold(0.0, f64::max)
    };

    let mut deterministic_cost = CostLedger::new();
    let mut stochastic_cost = CostLedger::new();
    let mut all_pieces = Vec::with_capacity(mesh.pieces());
    let mut y_grid = vec![problem.eta().to_vec()];
    let mut steps = Vec::with_capacity(config.n);
    let mut y = problem.eta().to_vec();
    for i in 0..config.n {
        let mut pieces = Vec::with_capacity(config.m);
        let mut ws = Vec::with_capacity(config.m);
        let mut integral = vec![0.0; d];
        let mut yj = y.clone();
        for j in 0..config.m {
            let t0 = mesh.fine(i, j);
            let (piece, w, next) = taylor::local_step(problem, &yj, t0, hbar, params.r, &mut deterministic_cost)?;
            for (acc, v) in integral.iter_mut().zip(taylor::integrate_w_along(&w, &piece, t0, t0 + hbar)) {
                *acc += v;
            }
            pieces.push(piece);
            ws.push(w);
            yj = next;
        }
        let speed = gamma_needed(&pieces);
        let needed = params.h * math::powi(d as f64, params.r as i32) * math::inv_factorial(params.r)
            * math::powf(speed, exponent);
        if needed > bound * (1.0 + 1e-12) {
            warnings.push(Warning::ResidualBound { step: i, bound, needed });
        }
        let family = ResidualFamily {
            field: problem.field().as_ref(),
            pieces: &pieces,
            ws: &ws,
            hbar,
            exponent,
            samples: config.samples,
            bound,
            cache: SummaryCache::new(),
        };
        let est = if vk > 1 {
            median_boost(&MedianBoost { base: &backend, k: vk }, &family, median_k, &mut rng)?
        } else {
            median_boost(&backend, &family, median_k, &mut rng)?
        };
        let repetitions = if est.is_exact() { 1 } else { median_k * vk };
        let (exact_mean, within_eps) = if config.track_events {
            let exact = family.cache.get(&family, &mut CostLedger::new()).mean;
            let ok = est.value.iter().zip(&exact).all(|(v, e)| (v - e).abs() <= config.eps1);
            (Some(exact), Some(ok))
        } else {
            (None, None)
        };
        stochastic_cost += est.cost;
        let mut next = y.clone();
        for c in 0..d {
            next[c] += integral[c] + scale * est.value[c];
        }
        steps.push(StepRecord { estimate: est.value, cost: est.cost, repetitions, exact_mean, within_eps });
        all_pieces.extend(pieces);
        y = next;
        y_grid.push(y.clone());
    }
    Ok(SolveResult {
        approx: PiecewiseTaylorApprox::new(mesh, all_pieces)?,
        y_grid,
        ledger: deterministic_cost + stochastic_cost,
        deterministic_cost,
        stochastic_cost,
        steps,
        warnings,
        config: config.clone(),
        median_k,
        vector_k: vk,
        residual_bound: bound,
    })
}

/// Value of the approximation at `t`.
pub fn eval_approx(result: &SolveResult, t: f64) -> Result<Vec<f64>> {
    result.approx.eval(t)
}

/// Max-norm error against `reference` over `probes` equally spaced points,
/// every mesh point, and the first float after each interior coarse point
/// (the right-hand limit there, up to one ulp).
pub fn sup_error(result: &SolveResult, reference: &dyn Fn(f64) -> Vec<f64>, probes: usize) -> Result<f64> {
    if probes < 2 {
        return Err(Error::arg("need at least two probes"));
    }
    let approx = &result.approx;
    let mesh = approx.mesh;
    let mut worst = 0.0_f64;
    let mut check = |t: f64| -> Result<()> {
        let (x, y) = (approx.eval(t)?, reference(t));
        worst = x.iter().zip(&y).fold(worst, |acc, (a, b)| acc.max((a - b).abs()));
        Ok(())
    };
    for k in 0..probes {
        check(if k + 1 == probes { mesh.b } else { mesh.a + (mesh.b - mesh.a) * k as f64 / (probes - 1) as f64 })?;
    }
    for t in mesh.points() {
        check(t)?;
    }
    for i in 1..mesh.n {
        check(math::next_up(mesh.coarse(i)))?;
    }
    Ok(worst)
}

/// One solver run of a trial series.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialOutcome {
    pub stream: u64,
    pub error: f64,
    pub cost: CostLedger,
    pub deflated_cost: f64,
    pub all_within_eps: Option<bool>,
    pub warnings: usize,
}

pub fn run_trial(
    problem: &IvpProblem,
    params: &HolderParams,
    config: &SolveConfig,
    t: u64,
    reference: &dyn Fn(f64) -> Vec<f64>,
    probes: usize,
) -> Result<TrialOutcome> {
    let result = solve(problem, params, &config.trial(t))?;
    Ok(TrialOutcome {
        stream: t,
        error: sup_error(&result, reference, probes)?,
        cost: result.ledger,
        deflated_cost: result.deflated_cost(),
        all_within_eps: result.all_within_eps(),
        warnings: result.warnings.len(),
    })
}

/// Trials on streams `0..trials`, sequentially.
pub fn run_trials(
    problem: &IvpProblem,
    params: &HolderParams,
    config: &SolveConfig,
    trials: usize,
    reference: &dyn Fn(f64) -> Vec<f64>,
    probes: usize,
) -> Result<Vec<TrialOutcome>> {
    (0..trials as u64).map(|t| run_trial(problem, params, config, t, reference, probes)).collect()
}

/// `sqrt(mean e^2)`.
pub fn rms(errors: &[f64]) -> f64 {
    math::sqrt(errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64)
}

/// Empirical `(1 - delta)`-quantile: the `ceil((1 - delta) T)`-th smallest.
pub fn upper_quantile(errors: &[f64], delta: f64) -> f64 {
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = math::ceil((1.0 - delta) * sorted.len() as f64) as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Root-mean-square sup-norm error over `trials` independent runs.
pub fn estimate_rand_error(
    problem: &IvpProblem,
    params: &HolderParams,
    config: &SolveConfig,
    trials: usize,
    reference: &dyn Fn(f64) -> Vec<f64>,
) -> Result<f64> {
    if trials < 2 {
        return Err(Error::InsufficientTrials { need: 2, got: trials });
    }
    if !config.mode.is_stochastic() {
        return Err(Error::arg("randomized error needs a stochastic mode"));
    }
    let outcomes = run_trials(problem, params, config, trials, reference, DEFAULT_PROBES)?;
    Ok(rms(&outcomes.iter().map(|o| o.error).collect::<Vec<_>>()))
}

/// Trials needed to resolve the `(1 - delta)`-quantile.
pub fn quantile_trials(delta: f64) -> usize {
    math::ceil(10.0 / delta) as usize
}

/// Empirical `(1 - delta)`-quantile of the sup-norm error.
pub fn estimate_quant_error(
    problem: &IvpProblem,
    params: &HolderParams,
    config: &SolveConfig,
    trials: usize,
    delta: f64,
    reference: &dyn Fn(f64) -> Vec<f64>,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::arg("delta must lie in (0, 1)"));
    }
    let need = quantile_trials(delta);
    if trials < need {
        return Err(Error::InsufficientTrials { need, got: trials });
    }
    let outcomes = run_trials(problem, params, config, trials, reference, DEFAULT_PROBES)?;
    Ok(upper_quantile(&outcomes.iter().map(|o| o.error).collect::<Vec<_>>(), delta))
}

/// Probe count used by the error estimators on top of the mesh points.
pub const DEFAULT_PROBES: usize = 257;
