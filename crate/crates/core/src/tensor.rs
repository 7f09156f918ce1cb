//! Contraction of derivative tensors with polynomial curves.
//!
//! For a symmetric order-`q` tensor `T` (layout `[c][i1]...[iq]`) and a
//! vector polynomial `delta(s) = sum_b delta_b s^b`, computes the coefficients
//! of `s -> T[delta(s), ..., delta(s)]`. Composing `f` (through its Taylor
//! tensors) with a polynomial path is the only nonlinear operation the
//! integrators need.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Coefficients of `T[delta(s)^q]`, truncated at degree `max_deg`.
pub(crate) fn contract_series(
    tensor: &[f64],
    d: usize,
    order: usize,
    delta: &[Vec<f64>],
    max_deg: usize,
) -> Vec<Vec<f64>> {
    debug_assert_eq!(tensor.len(), d.pow(order as u32 + 1));
    // cur[deg] is a tensor of the current (shrinking) rank
    let mut cur: Vec<Vec<f64>> = vec![tensor.to_vec()];
    let mut size = tensor.len();
    for _ in 0..order {
        let new_size = size / d;
        let top = ((cur.len() - 1) + delta.len().saturating_sub(1)).min(max_deg);
        let mut next = vec![vec![0.0; new_size]; top + 1];
        for (a, ta) in cur.iter().enumerate() {
            for (b, db) in delta.iter().enumerate() {
                let deg = a + b;
                if deg > max_deg {
                    break;
                }
                if db.iter().all(|&x| x == 0.0) {
                    continue;
                }
                let out = &mut next[deg];
                for (idx, slot) in out.iter_mut().enumerate() {
                    let row = &ta[idx * d..idx * d + d];
                    let mut acc = 0.0;
                    for (t, x) in row.iter().zip(db) {
                        acc += t * x;
                    }
                    *slot += acc;
                }
            }
        }
        cur = next;
        size = new_size;
    }
    cur
}

/// Coefficients of `sum_q (1/q!) T_q[delta(s)^q]` for `q = 0..tensors.len()`,
/// truncated at `max_deg`. This is the multivariate Taylor polynomial of `f`
/// about its center, evaluated along `center + delta(s)`.
pub(crate) fn taylor_along(tensors: &[Vec<f64>], d: usize, delta: &[Vec<f64>], max_deg: usize) -> Vec<Vec<f64>> {
    let mut total = vec![vec![0.0; d]; max_deg + 1];
    for (q, t) in tensors.iter().enumerate() {
        let scale = math::inv_factorial(q);
        for (deg, coeff) in contract_series(t, d, q, delta, max_deg).into_iter().enumerate() {
            for (acc, c) in total[deg].iter_mut().zip(coeff) {
                *acc += scale * c;
            }
        }
    }
    total
}
