//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value threshold below which a matrix is treated as
/// rank deficient.
pub(crate) const RANK_TOL: f64 = 1e-10;

/// Returns (smallest, largest) singular values.
pub(crate) fn singular_value_range(m: &DMatrix<f64>) -> (f64, f64) {
    let svd = m.clone().svd(false, false);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for &s in svd.singular_values.iter() {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    (lo, hi)
}

/// Errors unless the smallest singular value exceeds `RANK_TOL` times the
/// largest.
pub(crate) fn require_full_column_rank(m: &DMatrix<f64>) -> Result<()> {
    let (lo, hi) = singular_value_range(m);
    if hi == 0.0 || lo < RANK_TOL * hi {
        let ratio = if hi == 0.0 { 0.0 } else { lo / hi };
        return Err(Error::RankCondition {
            ratio,
            threshold: RANK_TOL,
        });
    }
    Ok(())
}

/// Solves a square system by LU with partial pivoting.
pub(crate) fn solve_square(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::RankCondition {
            ratio: 0.0,
            threshold: RANK_TOL,
        })
}

/// Solves a symmetric positive definite system, falling back to LU when the
/// Cholesky factorization fails for numerical reasons.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    solve_square(a, b)
}

pub(crate) fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.is_square() && m.clone().cholesky().is_some()
}

/// Moore-Penrose pseudo-inverse with a relative spectral cutoff.
pub(crate) fn pseudo_inverse(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let eps = rel_tol * max_sv;
    svd.pseudo_inverse(eps)
        .unwrap_or_else(|_| DMatrix::zeros(m.ncols(), m.nrows()))
}

/// Forces exact symmetry by averaging with the transpose.
pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    out
}

/// Projects a symmetric matrix onto the positive semidefinite cone by
/// clipping negative eigenvalues at zero.  Returns the repaired matrix and
/// whether any clipping occurred.
pub(crate) fn clip_psd(m: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let sym = symmetrize(m);
    let eig = sym.clone().symmetric_eigen();
    let min_ev = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_ev = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    if min_ev >= -1e-12 * max_ev.max(1.0) {
        return (sym, false);
    }
    let mut vals = eig.eigenvalues.clone();
    for v in vals.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let repaired = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    (symmetrize(&repaired), true)
}
