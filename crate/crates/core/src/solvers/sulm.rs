use faer::Mat;

use super::{
    check_constraints, check_shapes, constraints_dependent, finish_fit, fit_ols, FitResult, GramFactor,
    SolverConfig, Stopwatch,
};
use crate::basis::{BasisSpec, DesignMatrix};
use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::linalg::{column, llt_solve, symmetrize, to_vec, well_conditioned_cholesky};

/// Smallest accepted ratio of Cholesky diagonal entries of `−Y_c` before the
/// multiplier system is treated as singular.
const REDUCED_DIAG_RATIO: f64 = 1e-6;

/// SULM with a fresh factorization of `ΨᵀΨ + γI`.
pub fn fit_sulm(
    basis: &BasisSpec,
    design: &DesignMatrix,
    targets: &[f64],
    constraints: &ConstraintSet,
    config: &SolverConfig,
) -> Result<FitResult> {
    config.validate()?;
    check_shapes(basis, design, targets)?;
    if constraints.is_empty() {
        return fit_ols(basis, design, targets, config);
    }
    let mut watch = Stopwatch::start();
    let factor = GramFactor::new(design.values.as_ref(), targets, config.ridge, config.rank_tol)?;
    watch.lap("factorize");
    sulm_steps(basis, design, targets, constraints, config, &factor, watch)
}

/// SULM reusing an existing Gram factorization (warm start for refits that
/// keep Ψ and Y but change the constraints).
pub fn fit_sulm_with(
    factor: &GramFactor,
    basis: &BasisSpec,
    design: &DesignMatrix,
    targets: &[f64],
    constraints: &ConstraintSet,
    config: &SolverConfig,
) -> Result<FitResult> {
    config.validate()?;
    check_shapes(basis, design, targets)?;
    if factor.dim() != basis.cardinality() {
        return Err(Error::DimensionMismatch {
            what: "Gram factor",
            expected: basis.cardinality(),
            found: factor.dim(),
        });
    }
    if constraints.is_empty() {
        return fit_ols(basis, design, targets, config);
    }
    sulm_steps(basis, design, targets, constraints, config, factor, Stopwatch::start())
}

fn sulm_steps(
    basis: &BasisSpec,
    design: &DesignMatrix,
    targets: &[f64],
    constraints: &ConstraintSet,
    config: &SolverConfig,
    factor: &GramFactor,
    mut watch: Stopwatch,
) -> Result<FitResult> {
    check_constraints(basis, constraints)?;
    let a = constraints.matrix.as_ref();
    let n = basis.cardinality();
    let m = constraints.len();

    // (1) unconstrained estimate β̃ = G⁻¹ ΨᵀY
    let beta_tilde = factor.solve(column(factor.projected_targets()).as_ref());
    watch.lap("unconstrained");

    // (2) updating operator J = −G⁻¹ Aᵀ
    let mut j = factor.solve(a.transpose());
    j *= faer::Scale(-1.0);
    watch.lap("update_operator");

    // (3) reduced constraint matrix Y_c = A J
    let mut yc = a * &j;
    symmetrize(&mut yc);
    watch.lap("reduced_matrix");

    // (4) residual r = c − A β̃
    let a_beta = a * &beta_tilde;
    let r: Vec<f64> = (0..m).map(|i| constraints.rhs[i] - a_beta[(i, 0)]).collect();

    // (5) Y_c λ = r
    let lambda = solve_multipliers(&yc, &r, a, factor, config.rank_tol, n)?;
    watch.lap("multipliers");

    // (6) β = β̃ + J λ
    let update = &j * column(&lambda);
    let beta: Vec<f64> = (0..n).map(|i| beta_tilde[(i, 0)] + update[(i, 0)]).collect();
    watch.lap("update");

    let overconstrained = constraints_dependent(constraints, config.rank_tol)?;
    finish_fit(
        basis,
        design,
        targets,
        Some(constraints),
        beta,
        lambda,
        factor.ridge(),
        overconstrained,
        watch.finish(),
    )
}

/// Solves `Y_c λ = r`. `Y_c = −A G⁻¹ Aᵀ` is symmetric negative semidefinite:
/// when it is numerically definite a Cholesky factorization of `−Y_c` is
/// used, otherwise the minimum-norm least-squares solution is formed from
/// the factorized representation `Y_c = −B Bᵀ`, `B = A W`, `G⁻¹ = W Wᵀ`.
fn solve_multipliers(
    yc: &Mat<f64>,
    r: &[f64],
    a: faer::MatRef<'_, f64>,
    factor: &GramFactor,
    rank_tol: f64,
    cardinality: usize,
) -> Result<Vec<f64>> {
    let m = r.len();
    if m <= cardinality {
        let neg = yc * faer::Scale(-1.0);
        if let Some(llt) = well_conditioned_cholesky(neg.as_ref(), REDUCED_DIAG_RATIO) {
            let x = llt_solve(&llt, column(r).as_ref());
            return Ok((0..m).map(|i| -x[(i, 0)]).collect());
        }
    }
    // Bᵀ = Wᵀ Aᵀ has shape cardinality × m; Y_c = −V S² Vᵀ from its thin SVD.
    let bt = factor.half_solve(a.transpose());
    let svd = bt
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD of reduced constraint factor failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let v = svd.V();
    let smax = if s.nrows() > 0 { s[0] } else { 0.0 };
    let tol = if rank_tol > 0.0 { rank_tol } else { f64::EPSILON };
    let proj = v.transpose() * column(r);
    let mut scaled = Mat::<f64>::zeros(s.nrows(), 1);
    for i in 0..s.nrows() {
        if smax > 0.0 && s[i] > tol * smax {
            scaled[(i, 0)] = -proj[(i, 0)] / (s[i] * s[i]);
        }
    }
    Ok(to_vec((v * scaled).as_ref()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_design_matrix, InputSpec, Marginal};
    use crate::constraints::ConstraintKind;
    use crate::solvers::fit_kkt;

    fn basis(order: usize) -> BasisSpec {
        let input = InputSpec::from_pairs([("x", Marginal::deterministic(-1.0, 1.0).unwrap())]).unwrap();
        BasisSpec::new(input, order, 1.0).unwrap()
    }

    fn set(m: Mat<f64>, rhs: Vec<f64>) -> ConstraintSet {
        let n = rhs.len();
        ConstraintSet { matrix: m, rhs, kinds: vec![ConstraintKind::Pde; n], points: vec![vec![0.0]; n] }
    }

    fn data(basis: &BasisSpec) -> (DesignMatrix, Vec<f64>) {
        let pts: Vec<Vec<f64>> = (0..30).map(|i| vec![-1.0 + 2.0 * i as f64 / 29.0]).collect();
        let y = pts.iter().map(|p| (2.0 * p[0]).sin() + 0.3).collect();
        (build_design_matrix(basis, &pts, &[0]).unwrap(), y)
    }

    #[test]
    fn matches_kkt_on_well_posed_instance() {
        let b = basis(5);
        let (dm, y) = data(&b);
        let a = Mat::from_fn(2, 6, |i, j| ((i + 1) * (j + 2)) as f64 % 5.0 - 1.5);
        let c = set(a, vec![0.4, -1.0]);
        let cfg = SolverConfig::default();
        let s = fit_sulm(&b, &dm, &y, &c, &cfg).unwrap();
        let k = fit_kkt(&b, &dm, &y, &c, &cfg).unwrap();
        for (x, z) in s.model.coefficients().iter().zip(k.model.coefficients()) {
            assert!((x - z).abs() < 1e-9 * z.abs().max(1.0));
        }
        for (x, z) in s.multipliers.iter().zip(&k.multipliers) {
            assert!((x - z).abs() < 1e-7 * z.abs().max(1.0));
        }
        assert!(s.diagnostics.pde_residual_mse < 1e-20);
    }

    #[test]
    fn empty_constraints_reduce_to_ols() {
        let b = basis(3);
        let (dm, y) = data(&b);
        let c = set(Mat::zeros(0, 4), Vec::new());
        let s = fit_sulm(&b, &dm, &y, &c, &SolverConfig::default()).unwrap();
        let o = crate::solvers::fit_ols(&b, &dm, &y, &SolverConfig::default()).unwrap();
        assert_eq!(s.model.coefficients(), o.model.coefficients());
        assert!(s.multipliers.is_empty());
    }

    #[test]
    fn inconsistent_duplicates_resolve_midway() {
        let b = basis(2);
        let a = Mat::from_fn(2, 3, |_, j| if j == 0 { 1.0 } else { 0.0 });
        let c = set(a, vec![1.0, 3.0]);
        let fit = fit_sulm(&b, &DesignMatrix::empty(3), &[], &c, &SolverConfig::default()).unwrap();
        assert!((fit.model.coefficients()[0] - 2.0).abs() < 1e-9);
        assert!(fit.diagnostics.overconstrained);
    }

    #[test]
    fn warm_start_reuses_factor() {
        let b = basis(4);
        let (dm, y) = data(&b);
        let cfg = SolverConfig::default();
        let factor = GramFactor::new(dm.values.as_ref(), &y, cfg.ridge, cfg.rank_tol).unwrap();
        let c = set(Mat::from_fn(1, 5, |_, j| j as f64), vec![1.0]);
        let warm = fit_sulm_with(&factor, &b, &dm, &y, &c, &cfg).unwrap();
        let cold = fit_sulm(&b, &dm, &y, &c, &cfg).unwrap();
        assert_eq!(warm.model.coefficients(), cold.model.coefficients());
        assert!(warm.diagnostics.timing("factorize").is_none());
        for stage in ["unconstrained", "update_operator", "reduced_matrix", "multipliers", "total"] {
            assert!(cold.diagnostics.timing(stage).is_some(), "{stage}");
        }
    }
}
