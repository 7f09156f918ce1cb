use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ivp_bench::fixtures::{planted_spec, Fixture};
use ivp_bench::ladder::{run_ladder, run_scalar_ladder, ExperimentPlan, Ladder, DEFAULT_TOLERANCE};
use ivp_bench::report::{render, Format};
use ivp_bench::{BenchError, Result};
use ivp_core::adversary::PlantedClass;
use ivp_core::rng::{stream, uniform_in};
use ivp_core::scalar::{bisection_solve, IntegralEstimator};
use ivp_core::solver::DEFAULT_PROBES;
use ivp_core::{solve, sup_error, validate_holder, Error, Mode, SolveConfig};
use serde_json::json;

/// Convergence experiments for the two-level Taylor solvers.
///
/// Worker threads: set IVP_WORKERS (default: all cores). Exit status is 0 on
/// success, 2 when a slope or class check fails, 1 on error.
#[derive(Parser)]
#[command(name = "ivp-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Deterministic,
    Randomized,
    QuantumSim,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Deterministic => Mode::Deterministic,
            ModeArg::Randomized => Mode::Randomized,
            ModeArg::QuantumSim => Mode::QuantumSim,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Builtin fixture id or fixture JSON path.
    #[arg(long)]
    fixture: String,
    #[arg(long, value_enum, default_value = "deterministic")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// One solver run.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long = "N")]
        samples: Option<usize>,
    },
    /// One bisection run of the scalar solver.
    Bisect {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: f64,
    },
    /// Error-vs-cost ladder over coarse step counts.
    Ladder {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long = "N")]
        samples: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
    /// Cost-vs-accuracy ladder of the scalar solver.
    ScalarLadder {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
    /// Grid check of the fixture's class bounds.
    ValidateClass {
        #[arg(long)]
        fixture: String,
        /// Grid points per dimension.
        #[arg(long, default_value_t = 41)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes a planted-problem fixture with random coefficients.
    Plant {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_out(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| BenchError::Io { path: path.clone(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| BenchError::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

fn json_text(v: &serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// `true` when every check passed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { common, n, m, samples } => {
            let fixture = Fixture::load(&common.fixture)?;
            let mut config = SolveConfig::with_mode_defaults(common.mode.into(), n).seeded(common.seed);
            config.delta = common.delta;
            config.m = m.unwrap_or(config.m);
            config.samples = samples.unwrap_or(config.samples);
            let result = solve(&fixture.problem, &fixture.params, &config)?;
            let error = match fixture.reference() {
                Ok(reference) => Some(sup_error(&result, &reference, DEFAULT_PROBES)?),
                Err(_) => None,
            };
            let out = json!({
                "y_out": result.y_grid.last(),
                "error": error,
                "cost": result.ledger,
                "total_cost": result.ledger.total(),
                "deflated_cost": result.deflated_cost(),
                "median_k": result.median_k,
                "warnings": result.warnings,
            });
            write_out(common.out.as_ref(), &json_text(&out)?)?;
            Ok(true)
        }
        Command::Bisect { common, eps } => {
            let fixture = Fixture::load(&common.fixture)?;
            let est = IntegralEstimator::new(common.mode.into());
            let mut rng = stream(common.seed, 0);
            let out = match bisection_solve(&fixture.problem, &fixture.params, eps, common.delta, &est, &mut rng) {
                Ok(o) => json!({
                    "y_out": o.y,
                    "iters": o.iters,
                    "max_iters": o.max_iters,
                    "median_k": o.median_k,
                    "cost": o.cost,
                    "history": o.state.history,
                }),
                Err(Error::ContractBreach(state)) => json!({
                    "y_out": null,
                    "iters": state.iter,
                    "history": state.history,
                }),
                Err(e) => return Err(e.into()),
            };
            write_out(common.out.as_ref(), &json_text(&out)?)?;
            Ok(!out["y_out"].is_null())
        }
        Command::Ladder { common, n, m, samples, trials, tolerance } => {
            let mut plan = ExperimentPlan::new(&common.fixture, common.mode.into(), Ladder::Sizes(n));
            plan.trials = trials.unwrap_or(plan.trials);
            plan.m = m;
            plan.samples = samples;
            finish_plan(plan, common, tolerance, run_ladder)
        }
        Command::ScalarLadder { common, eps, trials, tolerance } => {
            let mut plan = ExperimentPlan::new(&common.fixture, common.mode.into(), Ladder::Tolerances(eps));
            plan.trials = trials.unwrap_or(plan.trials);
            finish_plan(plan, common, tolerance, run_scalar_ladder)
        }
        Command::ValidateClass { fixture, points, out } => {
            let fixture = Fixture::load(&fixture)?;
            let grid = state_grid(&fixture, points);
            let report = validate_holder(&fixture.problem, &fixture.params, &grid, 1e-12)?;
            let text = json_text(&json!({
                "passed": report.passed(),
                "points": report.points,
                "pairs": report.pairs,
                "worst_ratio": report.worst_ratio,
                "violations": report.violations.iter().take(20).collect::<Vec<_>>(),
            }))?;
            write_out(out.as_ref(), &text)?;
            Ok(report.passed())
        }
        Command::Plant { n, seed, eta, out } => {
            let mut rng = stream(seed, n as u64);
            let lambdas: Vec<f64> = (0..n).map(|_| uniform_in(&mut rng, -1.0, 1.0)).collect();
            let spec = planted_spec(lambdas, eta, PlantedClass::default(), Some(seed));
            let fixture = Fixture::from_spec("planted", spec.clone())?;
            let planted = fixture.planted().expect("planted fixture");
            eprintln!("planted mean {} -> z(1) = {}", planted.mean(), planted.z1());
            write_out(out.as_ref(), &(serde_json::to_string_pretty(&spec)? + "\n"))?;
            Ok(true)
        }
    }
}

fn finish_plan(
    mut plan: ExperimentPlan,
    common: Common,
    tolerance: f64,
    runner: fn(&ExperimentPlan) -> Result<ivp_bench::report::SlopeReport>,
) -> Result<bool> {
    plan.delta = common.delta;
    plan.seed = common.seed;
    plan.tolerance = tolerance;
    plan.out = common.out;
    let report = runner(&plan)?;
    write_out(plan.out.as_ref(), &render(&report, common.format)?)?;
    Ok(report.pass != Some(false))
}

/// Tensor grid over the box swept by the reference trajectory, or over
/// `eta +- D_0 (b - a)` when there is no reference.
fn state_grid(fixture: &Fixture, points: usize) -> Vec<Vec<f64>> {
    let (a, b) = (fixture.spec.a, fixture.spec.b);
    let reach = fixture.params.d[0] * (b - a);
    let mut lo: Vec<f64> = fixture.spec.eta.iter().map(|c| c - reach).collect();
    let mut hi: Vec<f64> = fixture.spec.eta.iter().map(|c| c + reach).collect();
    if fixture.has_reference() {
        lo = fixture.spec.eta.clone();
        hi = fixture.spec.eta.clone();
        for k in 1..=256 {
            let z = fixture.exact(a + (b - a) * k as f64 / 256.0).expect("reference exists");
            for c in 0..z.len() {
                lo[c] = lo[c].min(z[c]);
                hi[c] = hi[c].max(z[c]);
            }
        }
    }
    let step = (points - 1).max(1) as f64;
    let axes: Vec<Vec<f64>> =
        lo.iter().zip(&hi).map(|(&l, &h)| (0..points).map(|k| l + (h - l) * k as f64 / step).collect()).collect();
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter().flat_map(|p| axis.iter().map(move |&x| p.iter().copied().chain([x]).collect())).collect()
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
