//! The global approximation: one Taylor piece per fine interval.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mesh::TwoLevelMesh;
use crate::taylor::TaylorPolynomial;

/// Pieces are stored coarse-major: piece `(i, j)` sits at `i * m + j`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PiecewiseTaylorApprox {
    pub mesh: TwoLevelMesh,
    pub pieces: Vec<TaylorPolynomial>,
}

impl PiecewiseTaylorApprox {
    pub fn new(mesh: TwoLevelMesh, pieces: Vec<TaylorPolynomial>) -> Result<Self> {
        if pieces.len() != mesh.pieces() {
            return Err(Error::arg("piece count does not match the mesh"));
        }
        Ok(PiecewiseTaylorApprox { mesh, pieces })
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn piece(&self, i: usize, j: usize) -> &TaylorPolynomial {
        &self.pieces[i * self.mesh.m + j]
    }

    /// Value at `t` from the piece selected by [`TwoLevelMesh::locate`].
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let (i, j) = self.mesh.locate(t)?;
        Ok(self.piece(i, j).eval(t))
    }

    /// Value of piece `(i, j)` at `t`; used for one-sided limits at mesh
    /// points.
    pub fn eval_piece(&self, i: usize, j: usize, t: f64) -> Vec<f64> {
        self.piece(i, j).eval(t)
    }
}
