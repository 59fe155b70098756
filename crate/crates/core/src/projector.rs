//! Normal and tangent projectors of the level manifold through a point.
//!
//! Everything is derived from the thin QR factorization `J(x)^T = Q R`, with
//! the diagonal of `R` made positive. The columns of `Q` span the normal
//! space, so `N = Q Q^T`, `T = I - N` and `J^+ = Q R^{-T}`.

use crate::constraint::ConstraintMap;
use crate::error::{check_len, HugError, Result};
use crate::{Matrix, Vector};

/// Relative tolerance on the diagonal of `R` below which `J` counts as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Orthonormal basis of the normal space at a point.
///
/// This is the cheap part of a [`ProjectorBundle`], enough to reflect a
/// velocity without forming `n x n` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFrame {
    q: Matrix,
    r: Matrix,
}

impl NormalFrame {
    /// Factor `J^T`; `x` is only used to report a singular point.
    pub fn from_jacobian(j: &Matrix, x: &Vector) -> Result<Self> {
        let (m, n) = j.shape();
        let qr = j.transpose().qr();
        let mut q = qr.q();
        let mut r = qr.r();
        debug_assert_eq!(q.shape(), (n, m));

        for i in 0..m {
            if r[(i, i)] < 0.0 {
                q.column_mut(i).neg_mut();
                r.row_mut(i).neg_mut();
            }
        }
        let diag = r.diagonal();
        let largest = diag.amax();
        let smallest = diag.iter().fold(f64::INFINITY, |a, d| a.min(d.abs()));
        if !(largest > 0.0) || smallest <= RANK_TOLERANCE * largest {
            return Err(HugError::SingularGeometry {
                x: x.iter().copied().collect(),
            });
        }
        Ok(NormalFrame { q, r })
    }

    pub fn at<M: ConstraintMap + ?Sized>(map: &M, x: &Vector) -> Result<Self> {
        let j = map.jacobian(x)?;
        Self::from_jacobian(&j, x)
    }

    /// `N v = Q (Q^T v)`.
    pub fn normal_part(&self, v: &Vector) -> Vector {
        &self.q * (self.q.transpose() * v)
    }

    /// `R v = v - 2 N v`.
    pub fn reflect(&self, v: &Vector) -> Vector {
        v - self.normal_part(v) * 2.0
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }
}

/// Projectors, pseudoinverse and reflection computed at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorBundle {
    pub x: Vector,
    pub jacobian: Matrix,
    /// `J^+ = J^T (J J^T)^{-1}`, `n x m`.
    pub jplus: Matrix,
    /// Orthogonal projector onto the normal space.
    pub normal: Matrix,
    /// Orthogonal projector onto the tangent space `{v : J v = 0}`.
    pub tangent: Matrix,
    frame: NormalFrame,
}

impl ProjectorBundle {
    pub fn build<M: ConstraintMap + ?Sized>(map: &M, x: &Vector) -> Result<Self> {
        let jacobian = map.jacobian(x)?;
        let frame = NormalFrame::from_jacobian(&jacobian, x)?;
        let n = x.len();
        let q = &frame.q;
        let normal = q * q.transpose();
        let tangent = Matrix::identity(n, n) - &normal;
        // J^+ = Q R^{-T}  <=>  (J^+)^T = R^{-1} Q^T
        let jplus = frame
            .r
            .solve_upper_triangular(&q.transpose())
            .ok_or_else(|| HugError::SingularGeometry {
                x: x.iter().copied().collect(),
            })?
            .transpose();
        Ok(ProjectorBundle {
            x: x.clone(),
            jacobian,
            jplus,
            normal,
            tangent,
            frame,
        })
    }

    pub fn dim_n(&self) -> usize {
        self.x.len()
    }

    /// Orthonormal basis of the normal space (positive-diagonal convention).
    pub fn q(&self) -> &Matrix {
        &self.frame.q
    }

    pub fn frame(&self) -> &NormalFrame {
        &self.frame
    }

    pub fn reflect(&self, v: &Vector) -> Result<Vector> {
        check_len("v", self.dim_n(), v.len())?;
        Ok(self.frame.reflect(v))
    }

    /// `N'_perp(x)[w] = J^+ H(x)[w, .] T`: maps into the normal space and kills it.
    pub fn nprime_perp<M: ConstraintMap + ?Sized>(&self, map: &M, w: &Vector) -> Result<Matrix> {
        check_len("w", self.dim_n(), w.len())?;
        check_len("map dimension", self.dim_n(), map.dim_n())?;
        let hw = map.hess_partial(&self.x, w);
        Ok(&self.jplus * hw * &self.tangent)
    }

    /// `N'_par(x)[w] = (N'_perp(x)[w])^T`.
    pub fn nprime_par<M: ConstraintMap + ?Sized>(&self, map: &M, w: &Vector) -> Result<Matrix> {
        Ok(self.nprime_perp(map, w)?.transpose())
    }

    /// Directional derivative `N'(x)[w]` of the normal projector.
    pub fn nprime_total<M: ConstraintMap + ?Sized>(&self, map: &M, w: &Vector) -> Result<Matrix> {
        let perp = self.nprime_perp(map, w)?;
        let par = perp.transpose();
        Ok(perp + par)
    }
}
