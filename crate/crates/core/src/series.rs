//! Truncated univariate Taylor series ("jets").
//!
//! A jet of length `n` holds `a[k] = F^(k)(x0)/k!`, `k < n`. Arithmetic is
//! exact on the truncated coefficients, which is how scalar derivative
//! oracles for `1/g` and `exp(...)` are produced without symbolic algebra.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Product, truncated to the shorter length.
pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    let mut out = vec![0.0; n];
    for (k, o) in out.iter_mut().enumerate() {
        *o = (0..=k).map(|i| a[i] * b[k - i]).sum();
    }
    out
}

/// `1/a`; needs `a[0] != 0`.
pub fn recip(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    out[0] = 1.0 / a[0];
    for k in 1..n {
        let s: f64 = (1..=k).map(|i| a[i] * out[k - i]).sum();
        out[k] = -s * out[0];
    }
    out
}

/// `exp(a)`.
pub fn exp(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    out[0] = math::exp(a[0]);
    // E' = a' E  =>  k e_k = sum_{i=1..k} i a_i e_{k-i}
    for k in 1..n {
        let s: f64 = (1..=k).map(|i| i as f64 * a[i] * out[k - i]).sum();
        out[k] = s / k as f64;
    }
    out
}

/// Jet of `F(x0 + scale * t)` from the jet of `F` at `x0`.
pub fn rescale(a: &[f64], scale: f64) -> Vec<f64> {
    let mut p = 1.0;
    a.iter()
        .map(|&c| {
            let v = c * p;
            p *= scale;
            v
        })
        .collect()
}

/// Derivative values `F^(k)(x0) = k! a[k]`.
pub fn to_derivatives(a: &[f64]) -> Vec<f64> {
    a.iter().enumerate().map(|(k, &c)| c * math::factorial(k)).collect()
}

/// Inverse of [`to_derivatives`].
pub fn from_derivatives(d: &[f64]) -> Vec<f64> {
    d.iter().enumerate().map(|(k, &c)| c * math::inv_factorial(k)).collect()
}

/// Polynomial value `sum a[k] t^k` by Horner.
pub fn eval(a: &[f64], t: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// `int_0^t sum a[k] s^k ds`.
pub fn integrate(a: &[f64], t: f64) -> f64 {
    a.iter().enumerate().rev().fold(0.0, |acc, (k, &c)| acc * t + c / (k + 1) as f64) * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reciprocal_of_one_minus_t_is_geometric() {
        assert_eq!(recip(&[1.0, -1.0, 0.0, 0.0, 0.0]), vec![1.0; 5]);
    }

    #[test]
    fn exp_of_identity() {
        let e = exp(&[0.0, 1.0, 0.0, 0.0, 0.0]);
        for (k, v) in e.iter().enumerate() {
            assert_relative_eq!(*v, math::inv_factorial(k), max_relative = 1e-15);
        }
    }

    #[test]
    fn product_and_reciprocal_cancel() {
        let a = [2.0, -0.5, 0.25, 3.0];
        let p = mul(&a, &recip(&a));
        assert_relative_eq!(p[0], 1.0);
        for v in &p[1..] {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_round_trip() {
        let d = [1.0, 2.0, 6.0, 24.0];
        assert_eq!(to_derivatives(&from_derivatives(&d)), d.to_vec());
    }

    #[test]
    fn polynomial_integral() {
        // 1 + 2t + 3t^2 on [0, 2] -> 2 + 4 + 8
        assert_eq!(integrate(&[1.0, 2.0, 3.0], 2.0), 14.0);
        assert_eq!(eval(&[1.0, 2.0, 3.0], 2.0), 17.0);
    }
}
