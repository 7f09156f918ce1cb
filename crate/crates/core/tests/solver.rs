use std::sync::Arc;

use ivp_core::fields::{Constant, CosTime, Linear, Sine};
use ivp_core::reference::solve_to;
use ivp_core::solver::{quantile_trials, run_trials, Warning};
use ivp_core::{
    estimate_quant_error, estimate_rand_error, eval_approx, solve, sup_error, Error, HolderParams, IvpProblem, Mode,
    SolveConfig, VectorField,
};

fn sine() -> (IvpProblem, HolderParams) {
    (
        IvpProblem::new(Arc::new(Sine), vec![1.0], 0.0, 1.0).unwrap(),
        HolderParams::new(0, 1.0, vec![1.0], 1.0).unwrap(),
    )
}

fn sine_exact(t: f64) -> Vec<f64> {
    Sine.exact_solution(&[1.0], t).unwrap()
}

#[test]
fn exponential_example_is_accurate() {
    let problem = IvpProblem::new(Arc::new(Linear::new(1.0)), vec![1.0], 0.0, 0.5).unwrap();
    let params = HolderParams::new(1, 1.0, vec![2.0, 2.0], 2.0).unwrap();
    let result = solve(&problem, &params, &SolveConfig::deterministic(8, 8, 8)).unwrap();
    let end = result.y_grid.last().unwrap()[0];
    assert!((end - 0.5f64.exp()).abs() <= 1e-4, "{end}");
    let dense = eval_approx(&result, 0.25).unwrap()[0];
    assert!((dense - 0.25f64.exp()).abs() <= 1e-4, "{dense}");
}

#[test]
fn constant_field_is_exact_in_every_mode() {
    let problem = IvpProblem::new(Arc::new(Constant::new(vec![0.7, -1.3])), vec![2.0, 1.0], 0.0, 3.0).unwrap();
    let params = HolderParams::new(1, 0.5, vec![1.5, 1.0], 1.0).unwrap();
    for mode in [Mode::Deterministic, Mode::Randomized, Mode::QuantumSim] {
        let result = solve(&problem, &params, &SolveConfig::with_mode_defaults(mode, 6).seeded(3)).unwrap();
        let err = sup_error(&result, &|t| vec![2.0 + 0.7 * t, 1.0 - 1.3 * t], 101).unwrap();
        // rounding only: a few dozen ulps at |z| <= 4
        assert!(err <= 64.0 * f64::EPSILON * 4.0, "{mode:?}: {err}");
    }
}

#[test]
fn approximation_starts_at_eta() {
    let (problem, params) = sine();
    let result = solve(&problem, &params, &SolveConfig::deterministic(3, 4, 2)).unwrap();
    assert_eq!(eval_approx(&result, 0.0).unwrap(), vec![1.0]);
    assert!(eval_approx(&result, 1.0 + 1e-9).is_err());
    assert!(eval_approx(&result, -1e-9).is_err());
}

#[test]
fn coarse_points_use_the_left_piece() {
    let (problem, params) = sine();
    let result = solve(&problem, &params, &SolveConfig::deterministic(4, 3, 2)).unwrap();
    let mesh = result.approx.mesh;
    for i in 1..4 {
        let x = mesh.coarse(i);
        let left = result.approx.piece(i - 1, 2).eval(x);
        assert_eq!(eval_approx(&result, x).unwrap(), left);
    }
}

#[test]
fn sup_error_against_itself_is_zero() {
    let (problem, params) = sine();
    let result = solve(&problem, &params, &SolveConfig::deterministic(4, 4, 4)).unwrap();
    let me = |t: f64| eval_approx(&result, t).unwrap();
    assert_eq!(sup_error(&result, &me, 33).unwrap(), 0.0);
    assert!(sup_error(&result, &me, 1).is_err());
}

#[test]
fn deterministic_cost_is_pieces_times_oracle_calls() {
    let (problem, _) = sine();
    for r in 0..3 {
        let params = HolderParams::new(r, 1.0, vec![1.0; r + 1], 1.0).unwrap();
        let (n, m, samples) = (3, 5, 4);
        let result = solve(&problem, &params, &SolveConfig::deterministic(n, m, samples)).unwrap();
        let d = &result.deterministic_cost;
        assert_eq!(d.f_evals, (n * m) as u64);
        assert_eq!(d.deriv_evals, (n * m * r) as u64);
        assert_eq!(result.stochastic_cost.f_evals, (n * m * samples) as u64);
        assert_eq!(result.ledger, result.deterministic_cost + result.stochastic_cost);
        let steps = result.steps.iter().fold(Default::default(), |acc, s| acc + s.cost);
        assert_eq!(result.stochastic_cost, steps);
    }
}

#[test]
fn ledger_counts_draws_in_randomized_mode() {
    let (problem, params) = sine();
    let result = solve(&problem, &params, &SolveConfig::randomized(4).seeded(1)).unwrap();
    let s = result.ledger;
    assert!(s.rng_draws > 0);
    assert_eq!(s.quantum_queries, 0);
    // every Monte Carlo evaluation is one draw
    assert_eq!(result.stochastic_cost.f_evals, result.stochastic_cost.rng_draws);
}

#[test]
fn error_shrinks_with_n_on_sine() {
    let (problem, params) = sine();
    let err = |n| {
        let result = solve(&problem, &params, &SolveConfig::deterministic(n, n, 1)).unwrap();
        sup_error(&result, &sine_exact, 257).unwrap()
    };
    // error ~ n^{-3} when m = n, N = 1
    let ratio = err(8) / err(16);
    assert!((ratio / 8.0 - 1.0).abs() < 0.25, "{ratio}");
}

#[test]
fn telescoping_towards_reference() {
    // large N suppresses the midpoint term: error ~ h hbar^{r+rho}
    let (problem, params) = sine();
    let end = |m: usize| {
        let result = solve(&problem, &params, &SolveConfig::deterministic(4, m, 64)).unwrap();
        result.y_grid[4][0]
    };
    let reference = solve_to(&Sine, &[1.0], 1.0, 1e-13).unwrap()[0];
    let e1 = (end(8) - reference).abs();
    let e2 = (end(16) - reference).abs();
    assert!((e1 / e2 / 2.0 - 1.0).abs() < 0.2, "{e1} {e2}");
}

#[test]
fn two_dimensional_time_dependent_field() {
    // z' = cos(t) through the augmented autonomous system
    let problem = IvpProblem::new(Arc::new(CosTime), vec![0.0, 0.0], 0.0, 2.0).unwrap();
    let params = HolderParams::new(1, 1.0, vec![1.0, 1.0], 1.0).unwrap();
    let result = solve(&problem, &params, &SolveConfig::deterministic(8, 8, 4)).unwrap();
    let err = sup_error(&result, &|t: f64| vec![t, t.sin()], 257).unwrap();
    assert!(err < 1e-4, "{err}");
    let rand = solve(&problem, &params, &SolveConfig::randomized(4).seeded(2)).unwrap();
    assert_eq!(rand.vector_k, ivp_core::estimators::vector_k(2));
    assert!(sup_error(&rand, &|t: f64| vec![t, t.sin()], 257).unwrap() < 1e-2);
}

#[test]
fn clamped_sampling_reproduces_deterministic_bitwise() {
    let (problem, params) = sine();
    let det = solve(&problem, &params, &SolveConfig::deterministic(4, 6, 5)).unwrap();
    for mode in [Mode::Randomized, Mode::QuantumSim] {
        let config = SolveConfig { mode, eps1: 1e-12, median_k: Some(1), ..SolveConfig::deterministic(4, 6, 5) };
        let other = solve(&problem, &params, &config.seeded(9)).unwrap();
        assert_eq!(other.y_grid, det.y_grid, "{mode:?}");
        assert_eq!(other.approx, det.approx, "{mode:?}");
    }
}

#[test]
fn same_seed_same_trajectory() {
    let (problem, params) = sine();
    let config = SolveConfig::quantum(6).seeded(5);
    let a = solve(&problem, &params, &config.trial(3)).unwrap();
    let b = solve(&problem, &params, &config.trial(3)).unwrap();
    let c = solve(&problem, &params, &config.trial(4)).unwrap();
    assert_eq!(a.y_grid, b.y_grid);
    assert_ne!(a.y_grid, c.y_grid);
}

#[test]
fn strict_mode_rejects_large_steps() {
    let problem = IvpProblem::new(Arc::new(Linear::new(1.0)), vec![1.0], 0.0, 2.0).unwrap();
    let params = HolderParams::new(0, 1.0, vec![10.0], 1.0).unwrap();
    let config = SolveConfig::deterministic(1, 4, 1);
    let result = solve(&problem, &params, &config).unwrap();
    assert!(matches!(result.warnings[0], Warning::StepTooLarge { .. }));
    let strict = SolveConfig { strict: true, ..config };
    assert!(matches!(solve(&problem, &params, &strict), Err(Error::StepTooLarge(_))));
}

#[test]
fn rand_error_of_constant_field_is_zero() {
    let problem = IvpProblem::new(Arc::new(Constant::new(vec![1.0])), vec![0.0], 0.0, 1.0).unwrap();
    let params = HolderParams::new(0, 1.0, vec![1.0], 1.0).unwrap();
    let err = estimate_rand_error(&problem, &params, &SolveConfig::randomized(4), 5, &|t| vec![t]).unwrap();
    assert!(err < 1e-15);
}

#[test]
fn rand_error_in_degenerate_mode_equals_deterministic_error() {
    let (problem, params) = sine();
    let det = solve(&problem, &params, &SolveConfig::deterministic(4, 4, 4)).unwrap();
    let det_err = sup_error(&det, &sine_exact, ivp_core::solver::DEFAULT_PROBES).unwrap();
    let config = SolveConfig { mode: Mode::Randomized, eps1: 1e-12, median_k: Some(1), ..SolveConfig::deterministic(4, 4, 4) };
    let err = estimate_rand_error(&problem, &params, &config, 3, &sine_exact).unwrap();
    // identical trials; only the rms arithmetic rounds
    assert!((err - det_err).abs() <= 4.0 * f64::EPSILON * det_err, "{err} vs {det_err}");
    assert!(estimate_rand_error(&problem, &params, &SolveConfig::deterministic(4, 4, 4), 3, &sine_exact).is_err());
}

#[test]
fn quant_error_needs_enough_trials() {
    let (problem, params) = sine();
    let config = SolveConfig::quantum(4);
    assert_eq!(quantile_trials(0.25), 40);
    match estimate_quant_error(&problem, &params, &config, 39, 0.25, &sine_exact) {
        Err(Error::InsufficientTrials { need: 40, got: 39 }) => {}
        other => panic!("{other:?}"),
    }
    let q = estimate_quant_error(&problem, &params, &config, 40, 0.25, &sine_exact).unwrap();
    let outcomes = run_trials(&problem, &params, &config, 40, &sine_exact, ivp_core::solver::DEFAULT_PROBES).unwrap();
    let mut errs: Vec<f64> = outcomes.iter().map(|o| o.error).collect();
    errs.sort_by(f64::total_cmp);
    assert_eq!(q, errs[29]);
}

#[test]
fn all_steps_event_is_frequent() {
    let (problem, params) = sine();
    let config = SolveConfig { track_events: true, delta: 0.1, ..SolveConfig::randomized(4) };
    let trials = 200;
    let good = (0..trials)
        .filter(|&t| solve(&problem, &params, &config.trial(t)).unwrap().all_within_eps().unwrap())
        .count();
    let margin = 1.96 * (0.1f64 * 0.9 / trials as f64).sqrt();
    assert!(good as f64 / trials as f64 >= 0.9 - margin, "{good}/{trials}");
}

#[test]
fn residual_bound_warning_fires_when_bound_is_too_small() {
    let (problem, params) = sine();
    let config = SolveConfig { residual_bound: Some(1e-6), ..SolveConfig::randomized(2) };
    let result = solve(&problem, &params, &config).unwrap();
    assert!(result.warnings.iter().any(|w| matches!(w, Warning::ResidualBound { .. })));
    let clean = solve(&problem, &params, &SolveConfig::randomized(2)).unwrap();
    assert!(clean.warnings.is_empty(), "{:?}", clean.warnings);
}

#[test]
fn invalid_configs_are_rejected() {
    let (problem, params) = sine();
    assert!(solve(&problem, &params, &SolveConfig::deterministic(0, 1, 1)).is_err());
    assert!(solve(&problem, &params, &SolveConfig::deterministic(1, 1, 0)).is_err());
    let even = SolveConfig { median_k: Some(2), ..SolveConfig::randomized(2) };
    assert!(solve(&problem, &params, &even).is_err());
    let no_eps = SolveConfig { eps1: 0.0, ..SolveConfig::quantum(2) };
    assert!(solve(&problem, &params, &no_eps).is_err());
    let deep = HolderParams::new(9, 1.0, vec![1.0; 10], 1.0).unwrap();
    assert!(solve(&problem, &deep, &SolveConfig::deterministic(1, 1, 1)).is_err());
}
