//! Fixture files and the builtin fixture set.
//!
//! A fixture names a builtin right-hand side and carries the class
//! parameters and problem data:
//!
//! ```json
//! {"name": "sin", "d": 1, "r": 0, "rho": 1.0, "D": [1.0], "H": 1.0,
//!  "a": 0.0, "b": 1.0, "eta": [1.0]}
//! ```
//!
//! `p` is required by the scalar solver. `coeffs` parametrizes `constant`
//! (the constant vector) and `linear` (the rate). Planted problems carry
//! their coefficients and constants under `planted`.

use std::path::Path;
use std::sync::Arc;

use ivp_core::adversary::{make_planted, PlantedClass, PlantedProblem};
use ivp_core::fields::{Constant, CosTime, Linear, ReciprocalLinear, Sine, Square};
use ivp_core::reference::solve_to;
use ivp_core::{HolderParams, IvpProblem, VectorField};
use serde::{Deserialize, Serialize};

use crate::{BenchError, Result};

/// Relative tolerance of reference solves for fixtures without a closed form.
pub const REFERENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub name: String,
    pub d: usize,
    pub r: usize,
    pub rho: f64,
    #[serde(rename = "D")]
    pub bounds: Vec<f64>,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub eta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<PlantedSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub lambdas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub c1: f64,
    /// Derived from `c1`; stored for readers, recomputed on load.
    pub c3: f64,
}

pub struct Fixture {
    pub id: String,
    pub spec: FixtureSpec,
    pub problem: IvpProblem,
    pub params: HolderParams,
    planted: Option<PlantedProblem>,
}

impl std::fmt::Debug for Fixture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fixture").field("id", &self.id).field("spec", &self.spec).finish()
    }
}

impl Fixture {
    pub fn from_spec(id: impl Into<String>, spec: FixtureSpec) -> Result<Self> {
        let bad = |m: String| BenchError::Fixture(m);
        let mut planted = None;
        let field: Arc<dyn VectorField> = match spec.name.as_str() {
            "constant" => Arc::new(Constant::new(spec.coeffs.clone())),
            "linear" => match spec.coeffs.as_slice() {
                [rate] => Arc::new(Linear::new(*rate)),
                _ => return Err(bad("`linear` needs one coefficient".into())),
            },
            "exp" => Arc::new(Linear::new(1.0)),
            "sin" => Arc::new(Sine),
            "square" => Arc::new(Square),
            "cos-time" => Arc::new(CosTime),
            "reciprocal" => Arc::new(ReciprocalLinear),
            "planted" => {
                let ps = spec.planted.as_ref().ok_or_else(|| bad("`planted` needs a planted section".into()))?;
                let eta = *spec.eta.first().ok_or_else(|| bad("eta is empty".into()))?;
                let class = PlantedClass { r: spec.r, rho: spec.rho, c1: ps.c1 };
                let p = make_planted(ps.lambdas.clone(), eta, class)?;
                planted = Some(p.clone());
                Arc::new(p)
            }
            other => return Err(bad(format!("unknown field `{other}`"))),
        };
        if field.dim() != spec.d {
            return Err(bad(format!("field `{}` has dimension {}, fixture says {}", spec.name, field.dim(), spec.d)));
        }
        let problem = IvpProblem::new(field, spec.eta.clone(), spec.a, spec.b)?;
        let mut params = HolderParams::new(spec.r, spec.rho, spec.bounds.clone(), spec.h)?;
        if let Some(p) = spec.p {
            params = params.with_p(p)?;
        }
        Ok(Fixture { id: id.into(), spec, problem, params, planted })
    }

    /// A builtin id, or a path to a fixture JSON file.
    pub fn load(id_or_path: &str) -> Result<Self> {
        if let Some(spec) = builtin(id_or_path) {
            return Self::from_spec(id_or_path, spec);
        }
        let path = Path::new(id_or_path);
        if !path.is_file() {
            return Err(BenchError::UnknownFixture(id_or_path.into()));
        }
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.into(), source })?;
        Self::from_spec(id_or_path, serde_json::from_str(&text)?)
    }

    pub fn planted(&self) -> Option<&PlantedProblem> {
        self.planted.as_ref()
    }

    pub fn has_reference(&self) -> bool {
        self.planted.is_some() || self.exact(self.spec.a).is_some()
    }

    /// `z(t)`: closed form when the field has one, otherwise a reference
    /// solve to [`REFERENCE_TOL`].
    pub fn exact(&self, t: f64) -> Option<Vec<f64>> {
        let field = self.problem.field();
        let elapsed = t - self.spec.a;
        field
            .exact_solution(&self.spec.eta, elapsed)
            .or_else(|| self.planted.as_ref().and_then(|_| solve_to(field.as_ref(), &self.spec.eta, elapsed, REFERENCE_TOL).ok()))
    }

    pub fn reference(&self) -> Result<impl Fn(f64) -> Vec<f64> + Sync + '_> {
        if !self.has_reference() {
            return Err(BenchError::NoReference(self.id.clone()));
        }
        Ok(move |t: f64| self.exact(t).expect("reference checked at load"))
    }
}

/// Ids accepted by [`builtin`].
pub const BUILTIN_IDS: &[&str] =
    &["sin-r0", "sin-r1", "exp-r0", "exp-r1", "square", "cos-time", "constant", "reciprocal", "reciprocal-r1"];

pub fn builtin(id: &str) -> Option<FixtureSpec> {
    let scalar = |name: &str, r: usize, bounds: Vec<f64>, h: f64, a: f64, b: f64, eta: f64| FixtureSpec {
        name: name.into(),
        d: 1,
        r,
        rho: 1.0,
        bounds,
        h,
        p: None,
        a,
        b,
        eta: vec![eta],
        coeffs: Vec::new(),
        planted: None,
    };
    Some(match id {
        "sin-r0" => scalar("sin", 0, vec![1.0], 1.0, 0.0, 1.0, 1.0),
        "sin-r1" => scalar("sin", 1, vec![1.0, 1.0], 1.0, 0.0, 1.0, 1.0),
        // z = e^t stays in [1, e^{1/2}]
        "exp-r0" => scalar("exp", 0, vec![2.0], 1.0, 0.0, 0.5, 1.0),
        "exp-r1" => scalar("exp", 1, vec![2.0, 1.0], 1.0, 0.0, 0.5, 1.0),
        // z = 1/(1-t) stays in [1, 2]
        "square" => scalar("square", 1, vec![4.0, 4.0], 2.0, 0.0, 0.5, 1.0),
        "cos-time" => FixtureSpec { d: 2, eta: vec![0.0, 0.0], ..scalar("cos-time", 1, vec![1.0, 1.0], 1.0, 0.0, 2.0, 0.0) },
        "constant" => FixtureSpec {
            d: 2,
            eta: vec![2.0, 1.0],
            coeffs: vec![0.7, -1.3],
            ..scalar("constant", 0, vec![1.3], 1.0, 0.0, 3.0, 0.0)
        },
        // z(1.5) = 1; 1/(1+s) >= 0.4 on the bracket [0, 1.5]
        "reciprocal" => FixtureSpec { p: Some(0.4), ..scalar("reciprocal", 0, vec![1.0], 1.0, 0.0, 1.5, 0.0) },
        "reciprocal-r1" => FixtureSpec { p: Some(0.4), ..scalar("reciprocal", 1, vec![1.0, 1.0], 2.0, 0.0, 1.5, 0.0) },
        _ => return None,
    })
}

/// Fixture of a planted problem over `[0, 1]` in the default class
/// `D_0 = 3/2`, `p = 3/4`, `H = 1`.
pub fn planted_spec(lambdas: Vec<f64>, eta: f64, class: PlantedClass, seed: Option<u64>) -> FixtureSpec {
    FixtureSpec {
        name: "planted".into(),
        d: 1,
        r: class.r,
        rho: class.rho,
        bounds: std::iter::once(1.5).chain(std::iter::repeat(1.0).take(class.r)).collect(),
        h: 1.0,
        p: Some(0.75),
        a: 0.0,
        b: 1.0,
        eta: vec![eta],
        coeffs: Vec::new(),
        planted: Some(PlantedSpec { lambdas, seed, c1: class.c1, c3: class.c3() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load_and_have_references() {
        for id in BUILTIN_IDS {
            let f = Fixture::load(id).unwrap();
            assert!(f.has_reference(), "{id}");
            assert_eq!(f.exact(f.spec.a).unwrap(), f.spec.eta, "{id}");
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = builtin("reciprocal").unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"D\":[1.0]"));
        assert_eq!(serde_json::from_str::<FixtureSpec>(&text).unwrap(), spec);
    }

    #[test]
    fn unknown_ids_and_bad_specs_fail() {
        assert!(matches!(Fixture::load("no-such-fixture"), Err(BenchError::UnknownFixture(_))));
        let mut spec = builtin("sin-r0").unwrap();
        spec.d = 2;
        assert!(Fixture::from_spec("x", spec).is_err());
        let mut spec = builtin("sin-r0").unwrap();
        spec.name = "tanh".into();
        assert!(Fixture::from_spec("x", spec).is_err());
    }

    #[test]
    fn planted_reference_is_a_reference_solve() {
        let spec = planted_spec(vec![1.0, -1.0, 0.5], 0.0, PlantedClass::default(), Some(3));
        let f = Fixture::from_spec("planted", spec).unwrap();
        let z1 = f.exact(1.0).unwrap()[0];
        assert!((z1 - f.planted().unwrap().z1()).abs() < 1e-10);
    }
}
