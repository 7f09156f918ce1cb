//! High-accuracy reference trajectories for fields without closed forms.
//!
//! Classical RK4 on a uniform grid with Richardson extrapolation; the grid is
//! doubled until two successive extrapolated values agree to the requested
//! tolerance.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::problem::VectorField;

const MAX_STEPS: usize = 1 << 24;

fn rk4(field: &dyn VectorField, eta: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let d = eta.len();
    let h = t / steps as f64;
    let mut y = eta.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut tmp = vec![0.0; d];
    for _ in 0..steps {
        field.eval(&y, &mut k1);
        for c in 0..d {
            tmp[c] = y[c] + 0.5 * h * k1[c];
        }
        field.eval(&tmp, &mut k2);
        for c in 0..d {
            tmp[c] = y[c] + 0.5 * h * k2[c];
        }
        field.eval(&tmp, &mut k3);
        for c in 0..d {
            tmp[c] = y[c] + h * k3[c];
        }
        field.eval(&tmp, &mut k4);
        for c in 0..d {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    y
}

/// `z(t)` for `z' = f(z)`, `z(0) = eta`, to relative tolerance `tol`
/// (absolute below magnitude 1).
pub fn solve_to(field: &dyn VectorField, eta: &[f64], t: f64, tol: f64) -> Result<Vec<f64>> {
    if t == 0.0 {
        return Ok(eta.to_vec());
    }
    let mut steps = 64;
    let extrapolate = |coarse: &[f64], fine: &[f64]| -> Vec<f64> {
        coarse.iter().zip(fine).map(|(c, f)| f + (f - c) / 15.0).collect()
    };
    let mut coarse = rk4(field, eta, t, steps);
    let mut fine = rk4(field, eta, t, 2 * steps);
    let mut last = extrapolate(&coarse, &fine);
    while 4 * steps <= MAX_STEPS {
        steps *= 2;
        coarse = fine;
        fine = rk4(field, eta, t, 2 * steps);
        let next = extrapolate(&coarse, &fine);
        let scale = math::norm_inf(&next).max(1.0);
        let change = next.iter().zip(&last).fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        if !change.is_finite() {
            break;
        }
        if change <= tol * scale {
            return Ok(next);
        }
        last = next;
    }
    Err(Error::arg("reference integrator did not reach the tolerance"))
}
