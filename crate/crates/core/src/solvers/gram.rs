use faer::{Mat, MatRef, Side};

use super::Ridge;
use crate::error::{Error, Result};
use crate::linalg::{gram, lower_solve, lower_transpose_solve, well_conditioned_cholesky};

/// Minimum ratio of smallest to largest Cholesky diagonal accepted as
/// "full column rank" when choosing the automatic ridge.
const FULL_RANK_DIAG_RATIO: f64 = 1e-5;
const AUTO_RIDGE_SCALE: f64 = 1e-12;
/// Below this Cholesky diagonal ratio the regularized Gram is treated as singular.
const SINGULAR_DIAG_RATIO: f64 = 1e-5;

/// Resolves the ridge for a design matrix: explicit values pass through;
/// `Auto` gives 0 for a well-conditioned tall Ψ and a vanishing multiple of
/// the mean Gram diagonal otherwise (1e-12 absolute when Ψ has no rows).
pub fn resolve_ridge(psi: MatRef<'_, f64>, gram_matrix: MatRef<'_, f64>, ridge: Ridge) -> f64 {
    match ridge {
        Ridge::Fixed(g) => g,
        Ridge::Auto => {
            let n = gram_matrix.nrows();
            if psi.nrows() >= n && well_conditioned_cholesky(gram_matrix, FULL_RANK_DIAG_RATIO).is_some() {
                return 0.0;
            }
            let mean_diag = if n == 0 { 0.0 } else { (0..n).map(|i| gram_matrix[(i, i)]).sum::<f64>() / n as f64 };
            if mean_diag > 0.0 {
                AUTO_RIDGE_SCALE * mean_diag
            } else {
                AUTO_RIDGE_SCALE
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Factor {
    /// `G = L Lᵀ`.
    Cholesky(Mat<f64>),
    /// `G⁺ = W Wᵀ` with `W = Q Λ^{+½}`, used only if `G` is singular.
    Pseudo { vectors: Mat<f64>, inv_sqrt: Vec<f64> },
}

/// One factorization of the regularized Gram matrix `ΨᵀΨ + γI`, reusable
/// across every solve that shares Ψ.
#[derive(Debug, Clone)]
pub struct GramFactor {
    factor: Factor,
    ridge: f64,
    rhs: Vec<f64>,
}

impl GramFactor {
    /// Factorizes `ΨᵀΨ + γI` and stores `ΨᵀY` for later solves.
    pub fn new(psi: MatRef<'_, f64>, targets: &[f64], ridge: Ridge, rank_tol: f64) -> Result<Self> {
        if targets.len() != psi.nrows() {
            return Err(Error::DimensionMismatch {
                what: "target vector",
                expected: psi.nrows(),
                found: targets.len(),
            });
        }
        let mut g = gram(psi);
        let ridge = resolve_ridge(psi, g.as_ref(), ridge);
        for i in 0..g.nrows() {
            g[(i, i)] += ridge;
        }
        let factor = match well_conditioned_cholesky(g.as_ref(), SINGULAR_DIAG_RATIO) {
            Some(llt) => Factor::Cholesky(llt.L().to_owned()),
            None => pseudo_factor(g.as_ref(), rank_tol)?,
        };
        let rhs = if psi.nrows() == 0 {
            vec![0.0; psi.ncols()]
        } else {
            let y = crate::linalg::column(targets);
            crate::linalg::to_vec((psi.transpose() * y).as_ref())
        };
        Ok(Self { factor, ridge, rhs })
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// `ΨᵀY`.
    pub fn projected_targets(&self) -> &[f64] {
        &self.rhs
    }

    pub fn is_pseudo_inverse(&self) -> bool {
        matches!(self.factor, Factor::Pseudo { .. })
    }

    /// `G⁻¹ B` (pseudo-inverse if `G` is singular).
    pub fn solve(&self, b: MatRef<'_, f64>) -> Mat<f64> {
        match &self.factor {
            Factor::Cholesky(l) => {
                let y = lower_solve(l.as_ref(), b);
                lower_transpose_solve(l.as_ref(), y.as_ref())
            }
            Factor::Pseudo { vectors, inv_sqrt } => {
                let mut proj = vectors.transpose() * b;
                scale_rows(&mut proj, inv_sqrt, 2);
                vectors * proj
            }
        }
    }

    /// `Wᵀ B` where `G⁻¹ = W Wᵀ`; for the Cholesky case this is `L⁻¹ B`.
    pub fn half_solve(&self, b: MatRef<'_, f64>) -> Mat<f64> {
        match &self.factor {
            Factor::Cholesky(l) => lower_solve(l.as_ref(), b),
            Factor::Pseudo { vectors, inv_sqrt } => {
                let mut proj = vectors.transpose() * b;
                scale_rows(&mut proj, inv_sqrt, 1);
                proj
            }
        }
    }
}

fn scale_rows(m: &mut Mat<f64>, s: &[f64], power: i32) {
    for i in 0..m.nrows() {
        let f = s[i].powi(power);
        for j in 0..m.ncols() {
            m[(i, j)] *= f;
        }
    }
}

fn pseudo_factor(g: MatRef<'_, f64>, rank_tol: f64) -> Result<Factor> {
    let evd = g
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Gram eigendecomposition failed: {e:?}")))?;
    let mu = evd.S().column_vector();
    let max = (0..mu.nrows()).map(|i| mu[i].abs()).fold(0.0, f64::max);
    let tol = if rank_tol > 0.0 { rank_tol } else { f64::EPSILON };
    let inv_sqrt = (0..mu.nrows())
        .map(|i| if max > 0.0 && mu[i] > tol * max { 1.0 / mu[i].sqrt() } else { 0.0 })
        .collect();
    Ok(Factor::Pseudo { vectors: evd.U().to_owned(), inv_sqrt })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::column;

    #[test]
    fn auto_ridge_zero_for_full_rank() {
        let psi = Mat::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let g = gram(psi.as_ref());
        assert_eq!(resolve_ridge(psi.as_ref(), g.as_ref(), Ridge::Auto), 0.0);
    }

    #[test]
    fn auto_ridge_for_empty_design() {
        let psi = Mat::<f64>::zeros(0, 3);
        let g = gram(psi.as_ref());
        assert_eq!(resolve_ridge(psi.as_ref(), g.as_ref(), Ridge::Auto), 1e-12);
    }

    #[test]
    fn auto_ridge_for_duplicate_columns() {
        let psi = Mat::from_fn(4, 2, |i, _| i as f64 + 1.0);
        let g = gram(psi.as_ref());
        let r = resolve_ridge(psi.as_ref(), g.as_ref(), Ridge::Auto);
        assert!((r - 1e-12 * 30.0).abs() < 1e-20);
    }

    #[test]
    fn solve_matches_half_solve_product() {
        let psi = Mat::from_fn(6, 3, |i, j| ((i * 3 + j * 7) % 5) as f64 - 1.5);
        let f = GramFactor::new(psi.as_ref(), &[1.0; 6], Ridge::Fixed(0.1), 1e-12).unwrap();
        let b = column(&[1.0, -2.0, 0.5]);
        let x = f.solve(b.as_ref());
        let h = f.half_solve(b.as_ref());
        // bᵀ G⁻¹ b = ‖Wᵀ b‖²
        let lhs: f64 = (0..3).map(|i| b[(i, 0)] * x[(i, 0)]).sum();
        let rhs: f64 = (0..3).map(|i| h[(i, 0)].powi(2)).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn singular_gram_falls_back_to_pseudo_inverse() {
        let psi = Mat::from_fn(4, 2, |i, _| i as f64 + 1.0);
        let f = GramFactor::new(psi.as_ref(), &[1.0; 4], Ridge::Fixed(0.0), 1e-12).unwrap();
        assert!(f.is_pseudo_inverse());
        let b = column(&[1.0, 1.0]);
        let x = f.solve(b.as_ref());
        assert!(x[(0, 0)].is_finite() && (x[(0, 0)] - x[(1, 0)]).abs() < 1e-12);
    }
}
