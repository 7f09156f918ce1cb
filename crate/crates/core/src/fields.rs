//! Built-in right-hand sides with exact derivative tensors and, where
//! available, closed-form solutions.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::problem::VectorField;

/// Derivative order offered by the smooth built-in fields.
pub const MAX_ORDER: usize = 8;

/// `f(y) = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    value: Vec<f64>,
}

impl Constant {
    pub fn new(value: Vec<f64>) -> Self {
        Constant { value }
    }
}

impl VectorField for Constant {
    fn dim(&self) -> usize {
        self.value.len()
    }

    fn eval(&self, _y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.value);
    }

    fn max_order(&self) -> usize {
        MAX_ORDER
    }

    fn derivative(&self, order: usize, y: &[f64], out: &mut [f64]) {
        if order == 0 {
            self.eval(y, out);
        } else {
            out.fill(0.0);
        }
    }

    fn exact_solution(&self, eta: &[f64], t: f64) -> Option<Vec<f64>> {
        Some(eta.iter().zip(&self.value).map(|(e, c)| e + c * t).collect())
    }
}

/// Scalar `f(y) = lambda y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub lambda: f64,
}

impl Linear {
    pub fn new(lambda: f64) -> Self {
        Linear { lambda }
    }
}

impl VectorField for Linear {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        out[0] = self.lambda * y[0];
    }

    fn max_order(&self) -> usize {
        MAX_ORDER
    }

    fn derivative(&self, order: usize, y: &[f64], out: &mut [f64]) {
        out[0] = match order {
            0 => self.lambda * y[0],
            1 => self.lambda,
            _ => 0.0,
        };
    }

    fn exact_solution(&self, eta: &[f64], t: f64) -> Option<Vec<f64>> {
        Some(vec![eta[0] * math::exp(self.lambda * t)])
    }
}

/// Scalar `f(y) = sin y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sine;

impl VectorField for Sine {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        out[0] = math::sin(y[0]);
    }

    fn max_order(&self) -> usize {
        MAX_ORDER
    }

    fn derivative(&self, order: usize, y: &[f64], out: &mut [f64]) {
        out[0] = cyclic_sin(order, y[0]);
    }

    /// `2 atan(tan(eta/2) e^t)`, for `eta` in `(-pi, pi)`.
    fn exact_solution(&self, eta: &[f64], t: f64) -> Option<Vec<f64>> {
        if !(eta[0].abs() < core::f64::consts::PI) {
            return None;
        }
        Some(vec![2.0 * math::atan(math::tan(eta[0] / 2.0) * math::exp(t))])
    }
}

/// `d^k/dy^k sin y`.
fn cyclic_sin(order: usize, y: f64) -> f64 {
    match order % 4 {
        0 => math::sin(y),
        1 => math::cos(y),
        2 => -math::sin(y),
        _ => -math::cos(y),
    }
}

/// Scalar `f(y) = y^2`; blows up at `t = 1/eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square;

impl VectorField for Square {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        out[0] = y[0] * y[0];
    }

    fn max_order(&self) -> usize {
        MAX_ORDER
    }

    fn derivative(&self, order: usize, y: &[f64], out: &mut [f64]) {
        out[0] = match order {
            0 => y[0] * y[0],
            1 => 2.0 * y[0],
            2 => 2.0,
            _ => 0.0,
        };
    }

    fn exact_solution(&self, eta: &[f64], t: f64) -> Option<Vec<f64>> {
        let denom = 1.0 - eta[0] * t;
        (denom > 0.0).then(|| vec![eta[0] / denom])
    }
}

/// The non-autonomous scalar problem `z' = cos t`, made autonomous by
/// carrying time as the first component: `f(u, z) = (1, cos u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosTime;

impl VectorField for CosTime {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
        out[1] = math::cos(y[0]);
    }

    fn max_order(&self) -> usize {
        MAX_ORDER
    }

    fn derivative(&self, order: usize, y: &[f64], out: &mut [f64]) {
        if order == 0 {
            self.eval(y, out);
            return;
        }
        out.fill(0.0);
        // component 1, all indices 0: the first entry of its block
        let block = out.len() / 2;
        out[block] = cyclic_sin(order + 1, y[0]);
    }

    fn exact_solution(&self, eta: &[f64], t: f64) -> Option<Vec<f64>> {
        let u = eta[0] + t;
        Some(vec![u, eta[1] + math::sin(u) - math::sin(eta[0])])
    }
}

/// Scalar `f(s) = 1/(1 + s)` on `s > -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocalLinear;

impl VectorField for ReciprocalLinear {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        out[0] = 1.0 / (1.0 + y[0]);
    }

    fn max_order(&self) -> usize {
        MAX_ORDER
    }

    /// `(-1)^k k! (1 + s)^{-(k+1)}`.
    fn derivative(&self, order: usize, y: &[f64], out: &mut [f64]) {
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        out[0] = sign * math::factorial(order) * math::powi(1.0 + y[0], -(order as i32 + 1));
    }

    /// `-1 + sqrt((1 + eta)^2 + 2t)`.
    fn exact_solution(&self, eta: &[f64], t: f64) -> Option<Vec<f64>> {
        let q = (1.0 + eta[0]) * (1.0 + eta[0]) + 2.0 * t;
        (q > 0.0).then(|| vec![math::sqrt(q) - 1.0])
    }
}
