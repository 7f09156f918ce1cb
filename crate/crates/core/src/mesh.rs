//! Coarse/fine partition of `[a, b]`.

use crate::error::{Error, Result};
use crate::math;

/// `n` coarse intervals of width `h`, each split into `m` fine intervals of
/// width `hbar = h / m`.
///
/// Points are always produced from their indices (`a + i*h + j*hbar`), never
/// by accumulation, and the last fine point of interval `i` is the coarse
/// point `x_{i+1}` itself, so the two families nest exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TwoLevelMesh {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub m: usize,
    pub h: f64,
    pub hbar: f64,
}

impl TwoLevelMesh {
    pub fn new(a: f64, b: f64, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::arg("mesh needs n >= 1 and m >= 1"));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::arg("mesh needs finite a < b"));
        }
        let h = (b - a) / n as f64;
        Ok(TwoLevelMesh { a, b, n, m, h, hbar: h / m as f64 })
    }

    /// Coarse point `x_i`, `0 <= i <= n`; `x_n == b` exactly.
    pub fn coarse(&self, i: usize) -> f64 {
        debug_assert!(i <= self.n);
        if i == self.n {
            self.b
        } else {
            self.a + i as f64 * self.h
        }
    }

    /// Fine point `z_j^i`, `0 <= j <= m`; `z_m^i == x_{i+1}` exactly.
    pub fn fine(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j <= self.m);
        if j == self.m {
            self.coarse(i + 1)
        } else if j == 0 {
            self.coarse(i)
        } else {
            self.coarse(i) + j as f64 * self.hbar
        }
    }

    pub fn pieces(&self) -> usize {
        self.n * self.m
    }

    /// Locate the piece `(i, j)` whose closed interval `[z_j^i, z_{j+1}^i]`
    /// is used for `t`.
    ///
    /// Fine points interior to a coarse interval belong to the piece on their
    /// right; coarse points `x_1..x_{n-1}` belong to the piece on their left;
    /// `b` belongs to the last piece.
    pub fn locate(&self, t: f64) -> Result<(usize, usize)> {
        if !(t >= self.a && t <= self.b) {
            return Err(Error::OutOfDomain { t, a: self.a, b: self.b });
        }
        let guess = math::floor((t - self.a) / self.h);
        let mut i = if guess < 0.0 { 0 } else { (guess as usize).min(self.n - 1) };
        while i > 0 && t <= self.coarse(i) {
            i -= 1;
        }
        while i + 1 < self.n && t > self.coarse(i + 1) {
            i += 1;
        }
        let guess = math::floor((t - self.coarse(i)) / self.hbar);
        let mut j = if guess < 0.0 { 0 } else { (guess as usize).min(self.m - 1) };
        while j > 0 && t < self.fine(i, j) {
            j -= 1;
        }
        while j + 1 < self.m && t >= self.fine(i, j + 1) {
            j += 1;
        }
        Ok((i, j))
    }

    /// Every mesh point in increasing order, `x_0 = a` to `x_n = b`.
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n)
            .flat_map(move |i| (0..self.m).map(move |j| self.fine(i, j)))
            .chain(core::iter::once(self.b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_four_by_two() {
        let mesh = TwoLevelMesh::new(0.0, 1.0, 4, 2).unwrap();
        assert_eq!(mesh.h, 0.25);
        assert_eq!(mesh.hbar, 0.125);
        assert_eq!(mesh.coarse(2), 0.5);
        assert_eq!(mesh.fine(0, 1), 0.125);
    }

    #[test]
    fn degenerate_single_interval() {
        let mesh = TwoLevelMesh::new(0.0, 1.0, 1, 1).unwrap();
        assert_eq!(mesh.fine(0, 0), 0.0);
        assert_eq!(mesh.fine(0, 1), 1.0);
        assert_eq!(mesh.locate(1.0).unwrap(), (0, 0));
    }

    #[test]
    fn endpoint_identity() {
        let mesh = TwoLevelMesh::new(-1.0, 3.0, 8, 4).unwrap();
        assert_eq!(mesh.h, 0.5);
        assert_eq!(mesh.hbar, 0.125);
        assert_eq!(mesh.coarse(8), 3.0);
        assert_eq!(mesh.fine(7, 4), 3.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(TwoLevelMesh::new(0.0, 1.0, 0, 1).is_err());
        assert!(TwoLevelMesh::new(0.0, 1.0, 1, 0).is_err());
        assert!(TwoLevelMesh::new(1.0, 1.0, 1, 1).is_err());
        assert!(TwoLevelMesh::new(2.0, 1.0, 1, 1).is_err());
    }

    #[test]
    fn fine_family_nests_coarse_points() {
        let mesh = TwoLevelMesh::new(0.1, 2.3, 7, 3).unwrap();
        for i in 0..mesh.n {
            assert_eq!(mesh.fine(i, 0), mesh.coarse(i));
            assert_eq!(mesh.fine(i, mesh.m), mesh.coarse(i + 1));
        }
    }

    #[test]
    fn tie_breaking() {
        let mesh = TwoLevelMesh::new(0.0, 1.0, 4, 2).unwrap();
        assert_eq!(mesh.locate(0.0).unwrap(), (0, 0));
        // interior fine point goes right
        assert_eq!(mesh.locate(0.125).unwrap(), (0, 1));
        // coarse point goes left
        assert_eq!(mesh.locate(0.25).unwrap(), (0, 1));
        assert_eq!(mesh.locate(0.2500001).unwrap(), (1, 0));
        assert_eq!(mesh.locate(1.0).unwrap(), (3, 1));
        assert!(mesh.locate(1.0000001).is_err());
        assert!(mesh.locate(-1e-12).is_err());
    }

    #[test]
    fn points_are_sorted_and_complete() {
        let mesh = TwoLevelMesh::new(-1.0, 3.0, 8, 4).unwrap();
        let pts: alloc::vec::Vec<f64> = mesh.points().collect();
        assert_eq!(pts.len(), 33);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*pts.last().unwrap(), 3.0);
    }
}
