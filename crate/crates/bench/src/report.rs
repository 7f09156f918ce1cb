//! Slope reports and their serializations.
//!
//! Every format is byte-for-byte deterministic: JSON keys are sorted, and
//! every float is rounded to 12 significant digits before printing.

use std::fmt::Write as _;
use std::path::Path;

use ivp_core::Mode;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{BenchError, Result};

/// Header of quantum-sim reports.
pub const QUANTUM_COST_NOTE: &str = "quantum-sim costs follow the modeled oracle law: min{s, ceil(c_q M/eps1)} \
    queries per mean estimate with success probability 3/4; no quantum circuit is executed";

/// One ladder rung. ODE rungs carry `n`, `m`, `samples`; scalar rungs carry
/// `eps`, `success`, `iters` and `max_iters`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Rung {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub trials: usize,
    /// Mean ledger total per trial.
    pub cost: f64,
    /// Mean cost with the declared log factor divided out.
    pub deflated_cost: f64,
    /// rms, quantile or single-run error, per the mode.
    pub error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    pub warnings: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderKind {
    /// `x = ln cost`, `y = ln error`.
    Ode,
    /// `x = ln(1/eps)`, `y = ln cost`.
    Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub fixture: String,
    pub mode: Mode,
    pub kind: LadderKind,
    pub header: String,
    pub seed: u64,
    pub delta: f64,
    pub rungs: Vec<Rung>,
    pub points: Vec<[f64; 2]>,
    pub deflated_points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deflated_slope: Option<f64>,
    /// rms residual of the deflated fit, in natural-log units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub target: f64,
    pub tolerance: f64,
    pub residual_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

/// Least-squares line through `points`: `(slope, rms residual)`. Needs two
/// distinct abscissae.
pub fn fit(points: &[[f64; 2]]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p[0] - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = points.iter().map(|p| (p[0] - mx) * (p[1] - my)).sum::<f64>() / sxx;
    let sse: f64 = points.iter().map(|p| (p[1] - my - slope * (p[0] - mx)).powi(2)).sum();
    Some((slope, (sse / n).sqrt()))
}

impl SlopeReport {
    /// Fills the fits and the pass flag from `points`.
    pub fn finish(mut self) -> Self {
        self.slope = fit(&self.points).map(|f| f.0);
        let deflated = fit(&self.deflated_points);
        self.deflated_slope = deflated.map(|f| f.0);
        self.residual = deflated.map(|f| f.1);
        self.pass = deflated
            .map(|(slope, res)| (slope - self.target).abs() <= self.tolerance && res <= self.residual_threshold);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(format!("unknown format `{s}` (json, csv, markdown)")),
        }
    }
}

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Shortest representation of `round12(x)`; `null` when not finite.
pub fn fmt12(x: f64) -> String {
    serde_json::to_string(&round12(x)).expect("floats serialize")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(num) if !(num.is_i64() || num.is_u64()) => {
            if let Some(x) = num.as_f64() {
                *v = serde_json::Number::from_f64(round12(x)).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

const CSV_HEADER: [&str; 12] =
    ["n", "m", "N", "eps", "trials", "cost", "deflated_cost", "error", "success", "iters", "max_iters", "warnings"];

fn row(r: &Rung) -> [String; 12] {
    let opt = |x: Option<usize>| x.map_or(String::new(), |v| v.to_string());
    let optf = |x: Option<f64>| x.map_or(String::new(), fmt12);
    [
        opt(r.n),
        opt(r.m),
        opt(r.samples),
        optf(r.eps),
        r.trials.to_string(),
        fmt12(r.cost),
        fmt12(r.deflated_cost),
        fmt12(r.error),
        optf(r.success),
        opt(r.iters),
        opt(r.max_iters),
        r.warnings.to_string(),
    ]
}

/// Serializes `report`. An empty ladder gives a header-only CSV.
pub fn render(report: &SlopeReport, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut v = serde_json::to_value(report)?;
            round_value(&mut v);
            let mut s = serde_json::to_string_pretty(&v)?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADER)?;
            for r in &report.rungs {
                w.write_record(row(r))?;
            }
            let bytes = w.into_inner().map_err(|e| BenchError::Csv(e.into_error().into()))?;
            Ok(String::from_utf8(bytes).expect("csv of ascii fields"))
        }
        Format::Markdown => {
            let mut s = String::new();
            let optf = |x: Option<f64>| x.map_or("-".to_string(), fmt12);
            writeln!(s, "<!-- {} -->", report.header).unwrap();
            writeln!(s, "**{}** ({:?}, seed {}, delta {})", report.fixture, report.mode, report.seed, fmt12(report.delta))
                .unwrap();
            writeln!(s).unwrap();
            writeln!(s, "| {} |", CSV_HEADER.join(" | ")).unwrap();
            writeln!(s, "|{}", "---|".repeat(CSV_HEADER.len())).unwrap();
            for r in &report.rungs {
                let cells: Vec<String> = row(r).into_iter().map(|c| if c.is_empty() { "-".into() } else { c }).collect();
                writeln!(s, "| {} |", cells.join(" | ")).unwrap();
            }
            writeln!(s).unwrap();
            writeln!(
                s,
                "slope {} (deflated {}), residual {}, target {} +- {}: {}",
                optf(report.slope),
                optf(report.deflated_slope),
                optf(report.residual),
                fmt12(report.target),
                fmt12(report.tolerance),
                match report.pass {
                    Some(true) => "pass",
                    Some(false) => "FAIL",
                    None => "undefined",
                }
            )
            .unwrap();
            Ok(s)
        }
    }
}

pub fn emit_report(report: &SlopeReport, format: Format, path: &Path) -> Result<()> {
    let text = render(report, format)?;
    std::fs::write(path, text).map_err(|source| BenchError::Io { path: path.into(), source })
}
