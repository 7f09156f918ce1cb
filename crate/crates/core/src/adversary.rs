//! Planted problems: a scalar flow whose endpoint encodes a hidden mean.
//!
//! On the uniform partition `y_i = eta + i/(2n)` of `[eta, eta + 1/2]` put
//! bumps `h_i = c1 Delta^{r+rho} tau((y - y_i)/Delta)`, `Delta = 1/(2n)`,
//! and let `g = 1 + sum lambda_i h_i`, `f = 1/g`. Since `dt = g(z) dz`,
//!
//! ```text
//! z(1) = eta + 1 - c3 n^{-(r+rho)} (1/n) sum lambda_i,   c3 = c2 2^{-(r+rho+1)},
//! ```
//!
//! with `c2 = c1 int tau`, so any approximation of `z(1)` yields one of the
//! mean of the `lambda_i`, with error amplified by exactly `n^{r+rho}/c3`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::problem::{IvpProblem, VectorField};
use crate::series;

/// Derivative order offered by planted fields.
pub const MAX_ORDER: usize = 6;

/// `tau(u) = exp(4 - 1/(u(1-u)))` on `(0, 1)`, zero elsewhere; `tau(1/2) = 1`.
pub fn template(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    math::exp(4.0 - 1.0 / (u * (1.0 - u)))
}

/// Jet of `tau` at `u` with `len` coefficients.
pub fn template_jet(u: f64, len: usize) -> Vec<f64> {
    let mut q = vec![0.0; len];
    if u <= 0.0 || u >= 1.0 || len == 0 {
        return q;
    }
    let q0 = u * (1.0 - u);
    // below exp(-700) the value and all derivatives flush to zero
    if 1.0 / q0 > 700.0 {
        return q;
    }
    q[0] = q0;
    if len > 1 {
        q[1] = 1.0 - 2.0 * u;
    }
    if len > 2 {
        q[2] = -1.0;
    }
    let mut arg: Vec<f64> = series::recip(&q).into_iter().map(|x| -x).collect();
    arg[0] += 4.0;
    series::exp(&arg)
}

/// `int_0^1 tau`, by the trapezoid rule; `tau` is flat to all orders at both
/// ends, so the rule converges faster than any power of the step.
pub fn template_integral() -> f64 {
    const STEPS: usize = 1 << 12;
    let h = 1.0 / STEPS as f64;
    (1..STEPS).map(|k| template(k as f64 * h)).sum::<f64>() * h
}

/// Smoothness class and bump amplitude of a planted family.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlantedClass {
    pub r: usize,
    pub rho: f64,
    pub c1: f64,
}

/// Largest amplitude passing the default class `r = 0`, `rho = 1`,
/// `D_0 = 3/2`, `p = 3/4`, `H = 1`; see [`calibrate_c1`].
pub const DEFAULT_C1: f64 = 0.2114;

impl Default for PlantedClass {
    fn default() -> Self {
        PlantedClass { r: 0, rho: 1.0, c1: DEFAULT_C1 }
    }
}

impl PlantedClass {
    pub fn exponent(&self) -> f64 {
        self.r as f64 + self.rho
    }

    pub fn c2(&self) -> f64 {
        self.c1 * template_integral()
    }

    pub fn c3(&self) -> f64 {
        self.c2() * math::powf(2.0, -(self.exponent() + 1.0))
    }
}

/// One bump on `[lo, lo + width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BumpSpec {
    pub lo: f64,
    pub width: f64,
    /// `c1 width^{r+rho}`, attained at the midpoint.
    pub peak: f64,
    /// `c2 width^{r+rho+1}`.
    pub mass: f64,
}

impl BumpSpec {
    pub fn hi(&self) -> f64 {
        self.lo + self.width
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.peak * template((y - self.lo) / self.width)
    }

    /// Jet in `y`.
    pub fn jet(&self, y: f64, len: usize) -> Vec<f64> {
        let t = template_jet((y - self.lo) / self.width, len);
        series::rescale(&t, 1.0 / self.width).into_iter().map(|c| c * self.peak).collect()
    }
}

/// Bump `i` of `n` over `[eta, eta + 1/2]`.
pub fn make_bump(i: usize, n: usize, eta: f64, class: &PlantedClass) -> Result<BumpSpec> {
    if i >= n {
        return Err(Error::arg("bump index out of range"));
    }
    let width = 0.5 / n as f64;
    let e = class.exponent();
    Ok(BumpSpec {
        lo: eta + i as f64 * width,
        width,
        peak: class.c1 * math::powf(width, e),
        mass: class.c2() * math::powf(width, e + 1.0),
    })
}

/// `f = 1/g` with `g = 1 + sum lambda_i h_i`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlantedProblem {
    pub lambdas: Vec<f64>,
    pub eta: f64,
    pub class: PlantedClass,
    pub c3: f64,
    bumps: Vec<BumpSpec>,
}

pub fn make_planted(lambdas: Vec<f64>, eta: f64, class: PlantedClass) -> Result<PlantedProblem> {
    if lambdas.is_empty() {
        return Err(Error::arg("need at least one coefficient"));
    }
    if lambdas.iter().any(|l| !(l.abs() <= 1.0)) {
        return Err(Error::arg("coefficients must lie in [-1, 1]"));
    }
    let n = lambdas.len();
    let bumps = (0..n).map(|i| make_bump(i, n, eta, &class)).collect::<Result<Vec<_>>>()?;
    Ok(PlantedProblem { lambdas, eta, class, c3: class.c3(), bumps })
}

impl PlantedProblem {
    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn mean(&self) -> f64 {
        self.lambdas.iter().sum::<f64>() / self.n() as f64
    }

    fn active(&self, y: f64) -> Option<usize> {
        let width = self.bumps[0].width;
        let k = math::floor((y - self.eta) / width);
        (k >= 0.0 && (k as usize) < self.n()).then_some(k as usize)
    }

    pub fn g(&self, y: f64) -> f64 {
        1.0 + self.active(y).map_or(0.0, |i| self.lambdas[i] * self.bumps[i].eval(y))
    }

    /// Jet of `g` at `y`.
    pub fn g_jet(&self, y: f64, len: usize) -> Vec<f64> {
        let mut jet = match self.active(y) {
            Some(i) => self.bumps[i].jet(y, len).into_iter().map(|c| c * self.lambdas[i]).collect(),
            None => vec![0.0; len],
        };
        jet[0] += 1.0;
        jet
    }

    /// `int_eta^{eta+1/2} g = 1/2 + sum lambda_i mass_i`.
    pub fn g_integral(&self) -> f64 {
        0.5 + self.lambdas.iter().zip(&self.bumps).map(|(l, b)| l * b.mass).sum::<f64>()
    }

    /// `z(1)` from the arrival identity `int_eta^{z(1)} g = 1`.
    pub fn z1(&self) -> f64 {
        self.eta + 1.0 - self.c3 * math::powf(self.n() as f64, -self.class.exponent()) * self.mean()
    }

    /// The initial-value problem on `[0, 1]`.
    pub fn problem(&self) -> Result<IvpProblem> {
        IvpProblem::new(alloc::sync::Arc::new(self.clone()), vec![self.eta], 0.0, 1.0)
    }
}

impl VectorField for PlantedProblem {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        out[0] = 1.0 / self.g(y[0]);
    }

    fn max_order(&self) -> usize {
        MAX_ORDER
    }

    fn derivative(&self, order: usize, y: &[f64], out: &mut [f64]) {
        if order == 0 {
            self.eval(y, out);
            return;
        }
        let f = series::recip(&self.g_jet(y[0], order + 1));
        out[0] = f[order] * math::factorial(order);
    }
}

/// The planted mean implied by an endpoint value:
/// `(1 - z1 + eta) / (c3 n^{-(r+rho)})`, exactly 0 at `z1 = eta + 1`.
pub fn recover_mean(z1: f64, eta: f64, n: usize, c3: f64, exponent: f64) -> Result<f64> {
    if n == 0 || !(c3 > 0.0) {
        return Err(Error::arg("need n >= 1 and c3 > 0"));
    }
    Ok(((eta + 1.0) - z1) / (c3 * math::powf(n as f64, -exponent)))
}

/// Class bounds a planted field must respect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassTarget {
    pub d0: f64,
    pub p: f64,
    /// Bounds on `f^(k)`, `1 <= k <= r`; unused entries ignored.
    pub dk: [f64; 4],
    pub h: f64,
}

impl Default for ClassTarget {
    fn default() -> Self {
        ClassTarget { d0: 1.5, p: 0.75, dk: [0.0; 4], h: 1.0 }
    }
}

/// Largest observed value of each `|f^(k)|`, `k = 0..=r+1`, and the
/// minimum of `f`, over `samples` points of `[eta, eta + 1/2]`.
pub fn derivative_sups(planted: &PlantedProblem, samples: usize) -> (Vec<f64>, f64) {
    let r = planted.class.r;
    let mut sups = vec![0.0_f64; r + 2];
    let mut fmin = f64::INFINITY;
    for k in 0..=samples {
        let y = planted.eta + 0.5 * k as f64 / samples as f64;
        let f = series::to_derivatives(&series::recip(&planted.g_jet(y, r + 2)));
        fmin = fmin.min(f[0]);
        for (s, v) in sups.iter_mut().zip(&f) {
            *s = s.max(v.abs());
        }
    }
    (sups, fmin)
}

/// Sampled class check of a planted field. The Hölder constant of
/// `f^(r)` is bounded by `sup|f^(r+1)|` when `rho = 1`, and by
/// `(2 sup|f^(r)|)^{1-rho} sup|f^(r+1)|^rho` otherwise.
pub fn satisfies(planted: &PlantedProblem, target: &ClassTarget, samples: usize) -> bool {
    let r = planted.class.r;
    let rho = planted.class.rho;
    let (sups, fmin) = derivative_sups(planted, samples);
    if sups[0] > target.d0 || fmin < target.p {
        return false;
    }
    if (1..=r).any(|k| sups[k] > target.dk[k.min(3)]) {
        return false;
    }
    let holder = if rho == 1.0 {
        sups[r + 1]
    } else {
        math::powf(2.0 * sups[r], 1.0 - rho) * math::powf(sups[r + 1], rho)
    };
    holder <= target.h
}

/// Largest `c1` (to `1e-6`) for which the single-bump fields with
/// `lambda = +1` and `lambda = -1` pass [`satisfies`]. A single bump on
/// `[eta, eta + 1/2]` is the widest, hence the hardest, case.
pub fn calibrate_c1(r: usize, rho: f64, target: &ClassTarget, samples: usize) -> f64 {
    let ok = |c1: f64| {
        let class = PlantedClass { r, rho, c1 };
        [1.0, -1.0].iter().all(|&l| satisfies(&make_planted(vec![l], 0.0, class).unwrap(), target, samples))
    };
    let (mut lo, mut hi) = (0.0, 8.0);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn template_shape() {
        assert_eq!(template(0.5), 1.0);
        assert_eq!(template(0.0), 0.0);
        assert_eq!(template(1.0), 0.0);
        assert!(template(0.3) < 1.0 && template(0.3) > 0.0);
        assert_relative_eq!(template(0.3), template(0.7), max_relative = 1e-15);
    }

    #[test]
    fn template_jet_matches_differences() {
        let h = 1e-5;
        for u in [0.2, 0.45, 0.8] {
            let jet = series::to_derivatives(&template_jet(u, 4));
            let lo = series::to_derivatives(&template_jet(u - h, 4));
            let hi = series::to_derivatives(&template_jet(u + h, 4));
            for k in 0..3 {
                assert_relative_eq!((hi[k] - lo[k]) / (2.0 * h), jet[k + 1], max_relative = 1e-6, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn bump_scaling() {
        let class = PlantedClass::default();
        let b = make_bump(3, 8, 0.0, &class).unwrap();
        assert_eq!(b.width, 1.0 / 16.0);
        assert_relative_eq!(b.eval(b.lo + b.width / 2.0), class.c1 / 16.0, max_relative = 1e-15);
        assert_eq!(b.eval(b.lo), 0.0);
        assert_eq!(b.eval(b.hi()), 0.0);
        assert_eq!(b.jet(b.lo, 3), vec![0.0; 3]);
        assert!(make_bump(8, 8, 0.0, &class).is_err());
    }

    #[test]
    fn unperturbed_flow() {
        let p = make_planted(vec![0.0; 4], 0.25, PlantedClass::default()).unwrap();
        assert_eq!(p.z1(), 1.25);
        assert_eq!(p.g(0.3), 1.0);
        assert_eq!(recover_mean(1.25, 0.25, 4, p.c3, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(make_planted(vec![1.5], 0.0, PlantedClass::default()).is_err());
        assert!(make_planted(vec![], 0.0, PlantedClass::default()).is_err());
        assert!(recover_mean(1.0, 0.0, 0, 1.0, 1.0).is_err());
    }

    #[test]
    fn frozen_amplitude_is_the_calibrated_one() {
        let c1 = calibrate_c1(0, 1.0, &ClassTarget::default(), 4000);
        assert!(DEFAULT_C1 <= c1, "{c1}");
        assert!(c1 - DEFAULT_C1 < 5e-3, "{c1}");
    }
}
