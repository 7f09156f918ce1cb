//! Mean estimation over indexed families of bounded vectors.
//!
//! Three backends share one contract, "the returned mean is within `eps1`
//! of the true mean in every component with probability at least 3/4":
//!
//! - [`FullMean`] enumerates all items (exact, cost `s`);
//! - [`MonteCarlo`] averages `min{s, ceil((c M / eps1)^2)}` uniform draws;
//! - [`QuantumSim`] charges `min{s, ceil(c_q M / eps1)}` queries and returns
//!   the exact mean perturbed by a noise model meeting the contract.
//!
//! [`MedianBoost`] lifts any of them to success `1 - delta'` by taking the
//! component-wise median of `k` independent runs.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::OnceCell;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::ledger::CostLedger;
use crate::math;
use crate::rng;

/// `s` vectors of dimension `d` with max norm at most `bound`, produced on
/// demand. Access is not charged here; estimators charge one evaluation per
/// access they make.
pub trait IndexedFamily {
    fn len(&self) -> usize;

    fn dim(&self) -> usize;

    fn bound(&self) -> f64;

    fn value(&self, k: usize, out: &mut [f64]);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exact mean and per-component range, as known to the quantum
    /// simulator. Enumerations are charged as `sim_evals`; families that
    /// cache the summary charge only the first time.
    fn summary(&self, ledger: &mut CostLedger) -> FamilySummary {
        ledger.charge_sim(self.len() as u64);
        summarize(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySummary {
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Enumerates a family once.
pub fn summarize<F: IndexedFamily + ?Sized>(family: &F) -> FamilySummary {
    let d = family.dim();
    let mut acc = MeanAccumulator::new(d);
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    let mut buf = vec![0.0; d];
    for k in 0..family.len() {
        family.value(k, &mut buf);
        acc.push(&buf);
        for c in 0..d {
            min[c] = min[c].min(buf[c]);
            max[c] = max[c].max(buf[c]);
        }
    }
    FamilySummary { mean: acc.mean(), min, max }
}

/// Summary computed at most once per family instance.
#[derive(Debug, Default)]
pub struct SummaryCache(OnceCell<FamilySummary>);

impl SummaryCache {
    pub fn new() -> Self {
        SummaryCache(OnceCell::new())
    }

    pub fn get<F: IndexedFamily + ?Sized>(&self, family: &F, ledger: &mut CostLedger) -> FamilySummary {
        self.0
            .get_or_init(|| {
                ledger.charge_sim(family.len() as u64);
                summarize(family)
            })
            .clone()
    }
}

/// Shifted, compensated running mean: `x_0 + sum (x_k - x_0) / count`.
///
/// Constant inputs give the constant back exactly.
#[derive(Debug, Clone)]
pub(crate) struct MeanAccumulator {
    shift: Option<Vec<f64>>,
    sum: Vec<f64>,
    comp: Vec<f64>,
    count: u64,
}

impl MeanAccumulator {
    pub(crate) fn new(d: usize) -> Self {
        MeanAccumulator { shift: None, sum: vec![0.0; d], comp: vec![0.0; d], count: 0 }
    }

    pub(crate) fn push(&mut self, x: &[f64]) {
        let shift = self.shift.get_or_insert_with(|| x.to_vec());
        for c in 0..x.len() {
            let v = x[c] - shift[c];
            // Neumaier summation
            let t = self.sum[c] + v;
            if self.sum[c].abs() >= v.abs() {
                self.comp[c] += (self.sum[c] - t) + v;
            } else {
                self.comp[c] += (v - t) + self.sum[c];
            }
            self.sum[c] = t;
        }
        self.count += 1;
    }

    pub(crate) fn mean(&self) -> Vec<f64> {
        match &self.shift {
            None => vec![0.0; self.sum.len()],
            Some(shift) => {
                let n = self.count as f64;
                (0..shift.len()).map(|c| shift[c] + (self.sum[c] + self.comp[c]) / n).collect()
            }
        }
    }
}

/// Result of one estimator call. `cost` is exactly what the call charged.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanEstimate {
    pub value: Vec<f64>,
    pub cost: CostLedger,
    pub eps_target: f64,
    /// Nominal probability that every component is within `eps_target`.
    /// `1.0` means the value is the exact mean.
    pub success_prob: f64,
}

impl MeanEstimate {
    pub fn is_exact(&self) -> bool {
        self.success_prob == 1.0 && self.eps_target == 0.0
    }
}

pub trait MeanEstimator {
    fn estimate(&self, family: &dyn IndexedFamily, rng: &mut dyn RngCore) -> Result<MeanEstimate>;
}

fn check_family(family: &dyn IndexedFamily) -> Result<()> {
    if family.is_empty() {
        return Err(Error::arg("family is empty"));
    }
    Ok(())
}

fn check_eps(eps1: f64) -> Result<()> {
    if !(eps1 > 0.0) {
        return Err(Error::arg("eps1 must be positive"));
    }
    Ok(())
}

/// Exact mean over all items. Shared by every backend that falls back to
/// enumeration, so such fallbacks agree bit for bit.
fn enumerate(family: &dyn IndexedFamily) -> Vec<f64> {
    let mut acc = MeanAccumulator::new(family.dim());
    let mut buf = vec![0.0; family.dim()];
    for k in 0..family.len() {
        family.value(k, &mut buf);
        acc.push(&buf);
    }
    acc.mean()
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FullMean;

impl MeanEstimator for FullMean {
    fn estimate(&self, family: &dyn IndexedFamily, _rng: &mut dyn RngCore) -> Result<MeanEstimate> {
        full_mean(family)
    }
}

pub fn full_mean(family: &dyn IndexedFamily) -> Result<MeanEstimate> {
    check_family(family)?;
    let mut cost = CostLedger::new();
    cost.charge_f(family.len() as u64);
    Ok(MeanEstimate { value: enumerate(family), cost, eps_target: 0.0, success_prob: 1.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub eps1: f64,
    /// `c` in `sigma = ceil((c M / eps1)^2)`. With `c = 2` the standard
    /// error is at most `eps1 / 2`, and Chebyshev gives failure `<= 1/4`.
    pub calibration: f64,
}

impl MonteCarlo {
    pub fn new(eps1: f64) -> Self {
        MonteCarlo { eps1, calibration: 2.0 }
    }

    pub fn sample_size(&self, s: usize, bound: f64) -> usize {
        let want = math::ceil(math::powi(self.calibration * bound / self.eps1, 2));
        if want >= s as f64 {
            s
        } else {
            (want as usize).max(1)
        }
    }
}

impl MeanEstimator for MonteCarlo {
    fn estimate(&self, family: &dyn IndexedFamily, rng: &mut dyn RngCore) -> Result<MeanEstimate> {
        check_family(family)?;
        check_eps(self.eps1)?;
        let s = family.len();
        let sigma = self.sample_size(s, family.bound());
        let mut cost = CostLedger::new();
        cost.charge_f(sigma as u64);
        if sigma == s {
            return Ok(MeanEstimate { value: enumerate(family), cost, eps_target: 0.0, success_prob: 1.0 });
        }
        cost.charge_draws(sigma as u64);
        let mut acc = MeanAccumulator::new(family.dim());
        let mut buf = vec![0.0; family.dim()];
        for _ in 0..sigma {
            family.value(rng::index(rng, s), &mut buf);
            acc.push(&buf);
        }
        Ok(MeanEstimate { value: acc.mean(), cost, eps_target: self.eps1, success_prob: 0.75 })
    }
}

pub fn mc_mean(family: &dyn IndexedFamily, eps1: f64, rng: &mut dyn RngCore) -> Result<MeanEstimate> {
    MonteCarlo::new(eps1).estimate(family, rng)
}

/// Cost-model stand-in for quantum mean estimation.
///
/// Charges `min{s, ceil(c_q M / eps1)}` queries. If that is `s`, the exact
/// mean is returned. Otherwise each component gets, independently, noise
/// uniform on `[-eps1, eps1]` with probability 3/4 and uniform on
/// `[-2M, 2M]` with probability 1/4, and is then clamped to the items'
/// range intersected with `[-2M, 2M]`. Clamping never moves a value away
/// from the true mean, so the 3/4 contract is kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumSim {
    pub eps1: f64,
    pub c_q: f64,
}

impl QuantumSim {
    pub fn new(eps1: f64) -> Self {
        QuantumSim { eps1, c_q: 1.0 }
    }

    pub fn queries(&self, s: usize, bound: f64) -> usize {
        let want = math::ceil(self.c_q * bound / self.eps1);
        if want >= s as f64 {
            s
        } else {
            (want as usize).max(1)
        }
    }
}

impl MeanEstimator for QuantumSim {
    fn estimate(&self, family: &dyn IndexedFamily, rng: &mut dyn RngCore) -> Result<MeanEstimate> {
        check_family(family)?;
        check_eps(self.eps1)?;
        let s = family.len();
        let q = self.queries(s, family.bound());
        let mut cost = CostLedger::new();
        cost.charge_queries(q as u64);
        let summary = family.summary(&mut cost);
        if q == s {
            return Ok(MeanEstimate { value: summary.mean, cost, eps_target: 0.0, success_prob: 1.0 });
        }
        let m2 = 2.0 * family.bound();
        let mut value = summary.mean;
        for c in 0..value.len() {
            let noise = if rng::uniform(rng) < 0.75 {
                rng::uniform_in(rng, -self.eps1, self.eps1)
            } else {
                rng::uniform_in(rng, -m2, m2)
            };
            let lo = summary.min[c].max(-m2);
            let hi = summary.max[c].min(m2);
            value[c] = (value[c] + noise).max(lo).min(hi);
        }
        cost.charge_draws(2 * value.len() as u64);
        Ok(MeanEstimate { value, cost, eps_target: self.eps1, success_prob: 0.75 })
    }
}

pub fn quantum_sim_mean(family: &dyn IndexedFamily, eps1: f64, rng: &mut dyn RngCore) -> Result<MeanEstimate> {
    QuantumSim::new(eps1).estimate(family, rng)
}

/// Component-wise median of `k` independent runs of `base`.
///
/// If the first run is exact, it is returned as is: repeating a
/// deterministic computation cannot change the median.
pub struct MedianBoost<'a> {
    pub base: &'a dyn MeanEstimator,
    pub k: usize,
}

impl MeanEstimator for MedianBoost<'_> {
    fn estimate(&self, family: &dyn IndexedFamily, rng: &mut dyn RngCore) -> Result<MeanEstimate> {
        median_boost(self.base, family, self.k, rng)
    }
}

pub fn median_boost(
    base: &dyn MeanEstimator,
    family: &dyn IndexedFamily,
    k: usize,
    rng: &mut dyn RngCore,
) -> Result<MeanEstimate> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::arg("median count k must be odd"));
    }
    let first = base.estimate(family, rng)?;
    if k == 1 || first.is_exact() {
        return Ok(first);
    }
    let mut cost = first.cost;
    let eps_target = first.eps_target;
    let p = first.success_prob;
    let mut runs = vec![first.value];
    for _ in 1..k {
        let e = base.estimate(family, rng)?;
        cost += e.cost;
        runs.push(e.value);
    }
    let value = component_median(&runs);
    let success_prob = 1.0 - binomial_tail(k, 1.0 - p, k.div_ceil(2));
    Ok(MeanEstimate { value, cost, eps_target, success_prob })
}

/// Median of each component over `runs` (odd count).
pub fn component_median(runs: &[Vec<f64>]) -> Vec<f64> {
    let d = runs[0].len();
    let mut col = vec![0.0; runs.len()];
    (0..d)
        .map(|c| {
            for (slot, r) in col.iter_mut().zip(runs) {
                *slot = r[c];
            }
            col.sort_by(f64::total_cmp);
            col[col.len() / 2]
        })
        .collect()
}

/// `P(Bin(k, p) >= j)`, by exact summation of the mass function.
pub fn binomial_tail(k: usize, p: f64, j: usize) -> f64 {
    if j == 0 {
        return 1.0;
    }
    if j > k {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let ratio = p / (1.0 - p);
    let mut pmf = math::powi(1.0 - p, k as i32);
    let mut tail = 0.0;
    for i in 0..=k {
        if i >= j {
            tail += pmf;
        }
        pmf *= (k - i) as f64 / (i + 1) as f64 * ratio;
    }
    tail.min(1.0)
}

/// Failure probability of a `k`-fold median of runs that each fail with
/// probability 1/4: `P(Bin(k, 1/4) >= ceil(k/2))`.
pub fn median_failure(k: usize) -> f64 {
    binomial_tail(k, 0.25, k.div_ceil(2))
}

/// Smallest odd `k` whose median failure is at most
/// `1 - (1 - delta)^{1/n}`, the per-step share of a total failure budget
/// `delta` split over `n` independent steps.
pub fn choose_k(n: usize, delta: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::arg("n must be positive"));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::arg("delta must lie in (0, 1/2)"));
    }
    let target = -math::exp_m1(math::ln_1p(-delta) / n as f64);
    Ok(smallest_odd_k(target))
}

/// Odd `k` such that a `k`-fold median fails in a given component with
/// probability at most `1/(4d)`; by the union bound all `d` components
/// then succeed together with probability at least 3/4.
pub fn vector_k(d: usize) -> usize {
    smallest_odd_k(0.25 / d.max(1) as f64)
}

fn smallest_odd_k(target: f64) -> usize {
    // relative slack so that exact ties (e.g. tail 1/4 against 1/4) pass
    let target = target * (1.0 + 1e-12);
    let mut k = 1;
    while median_failure(k) > target {
        k += 2;
    }
    k
}

/// A family backed by stored vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct VecFamily {
    pub items: Vec<Vec<f64>>,
    pub bound: f64,
}

impl VecFamily {
    /// Bound taken as the largest item norm.
    pub fn new(items: Vec<Vec<f64>>) -> Self {
        let bound = items.iter().map(|v| math::norm_inf(v)).fold(0.0, f64::max);
        VecFamily { items, bound }
    }

    pub fn scalars(items: impl IntoIterator<Item = f64>) -> Self {
        Self::new(items.into_iter().map(|x| vec![x]).collect())
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }
}

impl IndexedFamily for VecFamily {
    fn len(&self) -> usize {
        self.items.len()
    }

    fn dim(&self) -> usize {
        self.items.first().map_or(1, |v| v.len())
    }

    fn bound(&self) -> f64 {
        self.bound
    }

    fn value(&self, k: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.items[k]);
    }
}

/// Estimator selected at run time.
pub enum Backend {
    Full(FullMean),
    MonteCarlo(MonteCarlo),
    Quantum(QuantumSim),
}

impl MeanEstimator for Backend {
    fn estimate(&self, family: &dyn IndexedFamily, rng: &mut dyn RngCore) -> Result<MeanEstimate> {
        match self {
            Backend::Full(e) => e.estimate(family, rng),
            Backend::MonteCarlo(e) => e.estimate(family, rng),
            Backend::Quantum(e) => e.estimate(family, rng),
        }
    }
}
