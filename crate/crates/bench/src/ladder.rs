//! Convergence ladders: one solver configuration per rung, trials run in
//! parallel, then a log-log fit against the predicted exponent.
//!
//! ODE ladders fit `ln error` against `ln cost`. The deflated fit uses the
//! cost with median repetitions divided out, which removes the `log n`
//! factor of the boosted estimators. Scalar ladders fit `ln cost` against
//! `ln(1/eps)`; the deflated fit uses the cost per unboosted integral call,
//! which removes both the bisection depth and the median count.

use std::path::PathBuf;

use ivp_core::rng::stream;
use ivp_core::scalar::{bisection_solve, IntegralEstimator};
use ivp_core::solver::{quantile_trials, rms, run_trial, upper_quantile, TrialOutcome, DEFAULT_PROBES};
use ivp_core::{sup_error, Error, Mode, SolveConfig};
use rayon::prelude::*;

use crate::fixtures::Fixture;
use crate::report::{LadderKind, Rung, SlopeReport, QUANTUM_COST_NOTE};
use crate::{BenchError, Result};

/// Environment variable holding the worker count; unset means all cores.
pub const WORKERS_ENV: &str = "IVP_WORKERS";

pub const DEFAULT_TOLERANCE: f64 = 0.12;
/// rms residual of the deflated fit, natural-log units.
pub const DEFAULT_RESIDUAL_THRESHOLD: f64 = 0.25;
pub const MIN_STOCHASTIC_TRIALS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub enum Ladder {
    /// Coarse step counts `n`.
    Sizes(Vec<usize>),
    /// Target accuracies of the scalar solver.
    Tolerances(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub fixture: String,
    pub mode: Mode,
    pub ladder: Ladder,
    /// Ignored in deterministic mode, which runs once per rung.
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tolerance: f64,
    pub residual_threshold: f64,
    pub probes: usize,
    /// Fixed fine-step count overriding the mode default.
    pub m: Option<usize>,
    /// Fixed midpoint count overriding the mode default.
    pub samples: Option<usize>,
}

impl ExperimentPlan {
    pub fn new(fixture: impl Into<String>, mode: Mode, ladder: Ladder) -> Self {
        ExperimentPlan {
            fixture: fixture.into(),
            mode,
            ladder,
            trials: if mode == Mode::QuantumSim { 40 } else { MIN_STOCHASTIC_TRIALS },
            delta: 0.25,
            seed: 0,
            out: None,
            tolerance: DEFAULT_TOLERANCE,
            residual_threshold: DEFAULT_RESIDUAL_THRESHOLD,
            probes: DEFAULT_PROBES,
            m: None,
            samples: None,
        }
    }

    fn trials(&self) -> usize {
        if self.mode.is_stochastic() { self.trials } else { 1 }
    }

    pub fn validate(&self) -> Result<()> {
        let plan = |m: &str| Err(BenchError::Plan(m.into()));
        match &self.ladder {
            Ladder::Sizes(ns) => {
                if ns.first() == Some(&0) || ns.windows(2).any(|w| w[0] >= w[1]) {
                    return plan("ladder sizes must be positive and strictly increasing");
                }
            }
            Ladder::Tolerances(eps) => {
                if eps.iter().any(|e| e.is_nan() || *e <= 0.0) || eps.windows(2).any(|w| w[0] <= w[1]) {
                    return plan("ladder tolerances must be positive and strictly decreasing");
                }
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return plan("delta must lie in (0, 1)");
        }
        if self.mode.is_stochastic() && self.trials < MIN_STOCHASTIC_TRIALS {
            return plan("stochastic ladders need at least 30 trials per rung");
        }
        let quantile_need = quantile_trials(self.delta);
        if self.mode == Mode::QuantumSim && matches!(self.ladder, Ladder::Sizes(_)) && self.trials < quantile_need {
            return Err(Error::InsufficientTrials { need: quantile_need, got: self.trials }.into());
        }
        Ok(())
    }
}

/// Pool sized by [`WORKERS_ENV`].
pub fn pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| BenchError::Plan(format!("thread pool: {e}")))
}

/// Predicted ODE slope of `ln error` against `ln cost`.
pub fn ode_target(mode: Mode, exponent: f64) -> f64 {
    match mode {
        Mode::Deterministic | Mode::QuantumSim => -(exponent + 0.5),
        Mode::Randomized => -(exponent + 1.0 / 3.0),
    }
}

/// Predicted scalar slope of `ln cost` against `ln(1/eps)`.
pub fn scalar_target(mode: Mode, exponent: f64) -> f64 {
    match mode {
        Mode::Deterministic => 1.0 / exponent,
        Mode::Randomized => 1.0 / (exponent + 0.5),
        Mode::QuantumSim => 1.0 / (exponent + 1.0),
    }
}

fn header(kind: LadderKind, mode: Mode) -> String {
    let base = match kind {
        LadderKind::Ode => "ln error vs ln ledger cost; deflated cost divides out the median repetitions",
        LadderKind::Scalar => "ln ledger cost vs ln(1/eps); deflated cost is per unboosted integral call",
    };
    if mode == Mode::QuantumSim { format!("{base}; {QUANTUM_COST_NOTE}") } else { base.into() }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    sum / count as f64
}

/// Solver configuration of rung `n` under `plan`.
pub fn rung_config(plan: &ExperimentPlan, n: usize) -> SolveConfig {
    let mut config = SolveConfig::with_mode_defaults(plan.mode, n).seeded(plan.seed);
    config.delta = plan.delta;
    if let Some(m) = plan.m {
        config.m = m;
    }
    if let Some(samples) = plan.samples {
        config.samples = samples;
    }
    config
}

fn ode_outcomes(
    fixture: &Fixture,
    config: &SolveConfig,
    trials: usize,
    probes: usize,
    pool: &rayon::ThreadPool,
) -> Result<Vec<TrialOutcome>> {
    let reference = fixture.reference()?;
    let outcomes: ivp_core::Result<Vec<TrialOutcome>> = pool.install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| run_trial(&fixture.problem, &fixture.params, config, t, &reference, probes))
            .collect()
    });
    Ok(outcomes?)
}

pub fn run_ladder(plan: &ExperimentPlan) -> Result<SlopeReport> {
    plan.validate()?;
    let Ladder::Sizes(ns) = &plan.ladder else {
        return Err(BenchError::Plan("ODE ladders take sizes".into()));
    };
    let fixture = Fixture::load(&plan.fixture)?;
    let pool = pool()?;
    let trials = plan.trials();
    let mut rungs = Vec::with_capacity(ns.len());
    for &n in ns {
        let config = rung_config(plan, n);
        let outcomes = ode_outcomes(&fixture, &config, trials, plan.probes, &pool)?;
        let errors: Vec<f64> = outcomes.iter().map(|o| o.error).collect();
        let error = match plan.mode {
            Mode::Deterministic => errors[0],
            Mode::Randomized => rms(&errors),
            Mode::QuantumSim => upper_quantile(&errors, plan.delta),
        };
        rungs.push(Rung {
            n: Some(n),
            m: Some(config.m),
            samples: Some(config.samples),
            trials,
            cost: mean(outcomes.iter().map(|o| o.cost.total() as f64)),
            deflated_cost: mean(outcomes.iter().map(|o| o.deflated_cost)),
            error,
            warnings: outcomes.iter().map(|o| o.warnings).sum(),
            ..Default::default()
        });
    }
    let point = |c: f64, r: &Rung| [c.ln(), r.error.ln()];
    Ok(SlopeReport {
        fixture: plan.fixture.clone(),
        mode: plan.mode,
        kind: LadderKind::Ode,
        header: header(LadderKind::Ode, plan.mode),
        seed: plan.seed,
        delta: plan.delta,
        points: rungs.iter().map(|r| point(r.cost, r)).collect(),
        deflated_points: rungs.iter().map(|r| point(r.deflated_cost, r)).collect(),
        rungs,
        slope: None,
        deflated_slope: None,
        residual: None,
        target: ode_target(plan.mode, fixture.params.exponent()),
        tolerance: plan.tolerance,
        residual_threshold: plan.residual_threshold,
        pass: None,
    }
    .finish())
}

/// One bisection trial: `None` when the run breached its iteration budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BisectionTrial {
    pub y: Option<f64>,
    pub iters: usize,
    pub max_iters: usize,
    pub cost: f64,
    pub cost_per_call: f64,
}

/// Bisection trials on streams `0..trials` of `seed`.
pub fn bisection_trials(
    fixture: &Fixture,
    mode: Mode,
    eps: f64,
    delta: f64,
    seed: u64,
    trials: usize,
    pool: &rayon::ThreadPool,
) -> Result<Vec<BisectionTrial>> {
    let est = IntegralEstimator::new(mode);
    let trials: ivp_core::Result<Vec<BisectionTrial>> = pool.install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                match bisection_solve(&fixture.problem, &fixture.params, eps, delta, &est, &mut stream(seed, t)) {
                    Ok(out) => Ok(BisectionTrial {
                        y: Some(out.y),
                        iters: out.iters,
                        max_iters: out.max_iters,
                        cost: out.cost.total() as f64,
                        cost_per_call: out.cost_per_call(),
                    }),
                    Err(Error::ContractBreach(state)) => {
                        let cost: u64 = state.history.iter().map(|s| s.cost.total()).sum();
                        Ok(BisectionTrial {
                            y: None,
                            iters: state.iter,
                            max_iters: state.iter,
                            cost: cost as f64,
                            cost_per_call: f64::NAN,
                        })
                    }
                    Err(e) => Err(e),
                }
            })
            .collect()
    });
    Ok(trials?)
}

pub fn run_scalar_ladder(plan: &ExperimentPlan) -> Result<SlopeReport> {
    plan.validate()?;
    let Ladder::Tolerances(epss) = &plan.ladder else {
        return Err(BenchError::Plan("scalar ladders take tolerances".into()));
    };
    let fixture = Fixture::load(&plan.fixture)?;
    let target_y = fixture.exact(fixture.spec.b).ok_or_else(|| BenchError::NoReference(plan.fixture.clone()))?[0];
    let pool = pool()?;
    let trials = plan.trials();
    let mut rungs = Vec::with_capacity(epss.len());
    for &eps in epss {
        let runs = bisection_trials(&fixture, plan.mode, eps, plan.delta, plan.seed, trials, &pool)?;
        let errors: Vec<f64> = runs.iter().map(|r| r.y.map_or(f64::INFINITY, |y| (y - target_y).abs())).collect();
        let finished: Vec<&BisectionTrial> = runs.iter().filter(|r| r.y.is_some()).collect();
        rungs.push(Rung {
            eps: Some(eps),
            trials,
            cost: mean(runs.iter().map(|r| r.cost)),
            deflated_cost: mean(finished.iter().map(|r| r.cost_per_call)),
            error: upper_quantile(&errors, plan.delta),
            success: Some(errors.iter().filter(|&&e| e <= eps).count() as f64 / trials as f64),
            iters: finished.iter().map(|r| r.iters).max(),
            max_iters: runs.iter().map(|r| r.max_iters).max(),
            warnings: trials - finished.len(),
            ..Default::default()
        });
    }
    let point = |c: f64, r: &Rung| [(1.0 / r.eps.unwrap()).ln(), c.ln()];
    Ok(SlopeReport {
        fixture: plan.fixture.clone(),
        mode: plan.mode,
        kind: LadderKind::Scalar,
        header: header(LadderKind::Scalar, plan.mode),
        seed: plan.seed,
        delta: plan.delta,
        points: rungs.iter().map(|r| point(r.cost, r)).collect(),
        deflated_points: rungs.iter().map(|r| point(r.deflated_cost, r)).collect(),
        rungs,
        slope: None,
        deflated_slope: None,
        residual: None,
        target: scalar_target(plan.mode, fixture.params.exponent()),
        tolerance: plan.tolerance,
        residual_threshold: plan.residual_threshold,
        pass: None,
    }
    .finish())
}

/// Deterministic sup-norm errors of `configs`, in order.
pub fn deterministic_errors(fixture: &Fixture, configs: &[SolveConfig], probes: usize) -> Result<Vec<f64>> {
    let reference = fixture.reference()?;
    let pool = pool()?;
    let errors: ivp_core::Result<Vec<f64>> = pool.install(|| {
        configs
            .par_iter()
            .map(|c| {
                let result = ivp_core::solve(&fixture.problem, &fixture.params, c)?;
                sup_error(&result, &reference, probes)
            })
            .collect()
    });
    Ok(errors?)
}

/// Ratios `e_k / e_{k+1}` of consecutive errors.
pub fn reduction_factors(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_validation() {
        let mut plan = ExperimentPlan::new("sin-r0", Mode::Randomized, Ladder::Sizes(vec![2, 4, 4]));
        assert!(plan.validate().is_err());
        plan.ladder = Ladder::Sizes(vec![2, 4]);
        assert!(plan.validate().is_ok());
        plan.trials = 29;
        assert!(plan.validate().is_err());
        plan.mode = Mode::Deterministic;
        assert!(plan.validate().is_ok());
        plan.mode = Mode::QuantumSim;
        plan.trials = 39;
        assert!(matches!(plan.validate(), Err(BenchError::Core(Error::InsufficientTrials { need: 40, got: 39 }))));
        plan.ladder = Ladder::Tolerances(vec![1e-2, 1e-2]);
        plan.trials = 40;
        assert!(plan.validate().is_err());
    }

    #[test]
    fn targets() {
        assert_eq!(ode_target(Mode::Randomized, 1.0), -4.0 / 3.0);
        assert_eq!(ode_target(Mode::QuantumSim, 1.0), -1.5);
        assert_eq!(scalar_target(Mode::Randomized, 1.0), 2.0 / 3.0);
        assert_eq!(scalar_target(Mode::QuantumSim, 1.0), 0.5);
        assert_eq!(scalar_target(Mode::Deterministic, 1.0), 1.0);
    }

    #[test]
    fn deterministic_ladder_on_exp() {
        let plan = ExperimentPlan::new("exp-r0", Mode::Deterministic, Ladder::Sizes(vec![4, 8, 16]));
        let report = run_ladder(&plan).unwrap();
        assert_eq!(report.rungs.len(), 3);
        assert!(report.rungs.iter().all(|r| r.trials == 1));
        let slope = report.deflated_slope.unwrap();
        assert!((slope - report.target).abs() < 0.2, "{slope}");
    }

    #[test]
    fn unknown_fixture_fails() {
        let plan = ExperimentPlan::new("no-such", Mode::Deterministic, Ladder::Sizes(vec![4]));
        assert!(run_ladder(&plan).is_err());
    }
}
