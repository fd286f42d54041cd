//! Small dense helpers on top of faer.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

/// `Aᵀ A`.
pub(crate) fn gram(a: MatRef<'_, f64>) -> Mat<f64> {
    if a.nrows() == 0 {
        return Mat::zeros(a.ncols(), a.ncols());
    }
    a.transpose() * a
}

/// Column vector from a slice.
pub(crate) fn column(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub(crate) fn to_vec(m: MatRef<'_, f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, 0)]).collect()
}

pub(crate) fn mat_vec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    to_vec((a * column(x)).as_ref())
}

pub(crate) fn symmetrize(m: &mut Mat<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Minimum-norm least-squares solution of a symmetric system through its
/// eigendecomposition. Eigenvalues with `|μ| ≤ rel_tol · max|μ|` are dropped.
/// Returns the solution and the numerical rank.
pub(crate) fn symmetric_pinv_solve(k: MatRef<'_, f64>, b: MatRef<'_, f64>, rel_tol: f64) -> Result<(Mat<f64>, usize)> {
    let evd = k
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigendecomposition failed: {e:?}")))?;
    let q = evd.U();
    let mu = evd.S().column_vector();
    let max_abs = (0..mu.nrows()).map(|i| mu[i].abs()).fold(0.0, f64::max);
    let cutoff = rel_tol * max_abs;
    let mut proj = q.transpose() * b;
    let mut rank = 0;
    for i in 0..mu.nrows() {
        let scale = if mu[i].abs() > cutoff && max_abs > 0.0 {
            rank += 1;
            1.0 / mu[i]
        } else {
            0.0
        };
        for j in 0..proj.ncols() {
            proj[(i, j)] *= scale;
        }
    }
    Ok((q * proj, rank))
}

/// Numerical rank from singular values with a relative cutoff.
pub(crate) fn numerical_rank(a: MatRef<'_, f64>, rel_tol: f64) -> Result<usize> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0);
    }
    let s = a
        .singular_values()
        .map_err(|e| Error::Numerical(format!("singular value computation failed: {e:?}")))?;
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > rel_tol * smax).count())
}

/// Cholesky factor if `m` is numerically positive definite: the factor must
/// exist and the ratio of its smallest to largest diagonal entry must exceed
/// `min_diag_ratio`.
pub(crate) fn well_conditioned_cholesky(m: MatRef<'_, f64>, min_diag_ratio: f64) -> Option<faer::linalg::solvers::Llt<f64>> {
    let llt = m.llt(Side::Lower).ok()?;
    let l = llt.L();
    let n = l.nrows();
    if n == 0 {
        return Some(llt);
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let d = l[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if hi > 0.0 && lo / hi > min_diag_ratio {
        Some(llt)
    } else {
        None
    }
}

/// `L⁻¹ B` for a lower-triangular factor.
pub(crate) fn lower_solve(l: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut x = b.to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l, x.as_mut(), faer::get_global_parallelism());
    x
}

/// `L⁻ᵀ B` for a lower-triangular factor.
pub(crate) fn lower_transpose_solve(l: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut x = b.to_owned();
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(
        l.transpose(),
        x.as_mut(),
        faer::get_global_parallelism(),
    );
    x
}

/// Solves with a Cholesky factorization.
pub(crate) fn llt_solve(llt: &faer::linalg::solvers::Llt<f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    llt.solve(b)
}
