//! Symmetric Toeplitz tridiagonal operators and the Thomas solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::{invalid, Result};

/// The operator `scale * tridiag(off, diag, off)` applied as a three-point
/// stencil. Never materialized.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Stencil {
    pub diag: f64,
    pub off: f64,
}

impl Stencil {
    /// `(1/4) * tridiag(-1, 2, -1)`.
    pub const QUARTER_LAPLACIAN: Stencil = Stencil { diag: 0.5, off: -0.25 };

    /// `out = A x`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        debug_assert_eq!(out.len(), d);
        for j in 0..d {
            let mut acc = self.diag * x[j];
            if j > 0 {
                acc += self.off * x[j - 1];
            }
            if j + 1 < d {
                acc += self.off * x[j + 1];
            }
            out[j] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    /// Solves `A x = rhs` for the `d x d` operator.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let d = rhs.len();
        thomas(
            &vec![self.off; d.saturating_sub(1)],
            &vec![self.diag; d],
            &vec![self.off; d.saturating_sub(1)],
            rhs,
        )
    }

    /// Largest eigenvalue, `diag - 2 off cos(pi / (d + 1))` for `off < 0`.
    pub fn max_eigenvalue(&self, d: usize) -> f64 {
        let c = libm::cos(core::f64::consts::PI / (d as f64 + 1.0));
        self.diag + 2.0 * libm::fabs(self.off) * c
    }
}

/// Thomas algorithm for a general tridiagonal system.
///
/// `lower[i]` couples row `i + 1` to column `i`, `upper[i]` couples row `i`
/// to column `i + 1`. Requires a nonsingular system that needs no pivoting
/// (diagonally dominant or symmetric positive definite).
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if rhs.len() != n || lower.len() + 1 != n.max(1) || upper.len() + 1 != n.max(1) {
        return Err(invalid("tridiagonal system", "inconsistent band lengths"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(invalid("tridiagonal system", "zero pivot"));
    }
    if n > 1 {
        c[0] = upper[0] / pivot;
    }
    x[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot == 0.0 {
            return Err(invalid("tridiagonal system", "zero pivot"));
        }
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        x[i] = (rhs[i] - lower[i - 1] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}
