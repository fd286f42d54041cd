use faer::Mat;

use super::{
    check_constraints, check_shapes, constraints_dependent, finish_fit, fit_ols, resolve_ridge, FitResult,
    SolverConfig, Stopwatch,
};
use crate::basis::{BasisSpec, DesignMatrix};
use crate::constraints::ConstraintSet;
use crate::error::Result;
use crate::linalg::{gram, symmetric_pinv_solve};

/// Solves the blocked system
///
/// ```text
/// [ ΨᵀΨ + γI  Aᵀ ] [β]   [ΨᵀY]
/// [ A         0  ] [λ] = [ c ]
/// ```
///
/// with a symmetric eigendecomposition, returning the minimum-norm
/// least-squares solution when the system is singular or inconsistent.
pub fn fit_kkt(
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
    check_constraints(basis, constraints)?;

    let mut watch = Stopwatch::start();
    let n = basis.cardinality();
    let m = constraints.len();
    let psi = design.values.as_ref();
    let g = gram(psi);
    let ridge = resolve_ridge(psi, g.as_ref(), config.ridge);
    let a = &constraints.matrix;

    let mut k = Mat::<f64>::zeros(n + m, n + m);
    for j in 0..n {
        for i in 0..n {
            k[(i, j)] = g[(i, j)];
        }
        k[(j, j)] += ridge;
    }
    for i in 0..m {
        for j in 0..n {
            let v = a[(i, j)];
            k[(n + i, j)] = v;
            k[(j, n + i)] = v;
        }
    }
    let mut rhs = Mat::<f64>::zeros(n + m, 1);
    if design.nrows() > 0 {
        let py = psi.transpose() * crate::linalg::column(targets);
        for i in 0..n {
            rhs[(i, 0)] = py[(i, 0)];
        }
    }
    for i in 0..m {
        rhs[(n + i, 0)] = constraints.rhs[i];
    }
    watch.lap("assemble");

    let (x, _rank) = symmetric_pinv_solve(k.as_ref(), rhs.as_ref(), config.rank_tol)?;
    watch.lap("solve");
    let beta: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    let lambda: Vec<f64> = (0..m).map(|i| x[(n + i, 0)]).collect();

    let overconstrained = constraints_dependent(constraints, config.rank_tol)?;
    finish_fit(
        basis,
        design,
        targets,
        Some(constraints),
        beta,
        lambda,
        ridge,
        overconstrained,
        watch.finish(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{InputSpec, Marginal};
    use crate::constraints::ConstraintKind;

    fn basis3() -> BasisSpec {
        let input = InputSpec::from_pairs([("x", Marginal::deterministic(0.0, 1.0).unwrap())]).unwrap();
        BasisSpec::new(input, 2, 1.0).unwrap()
    }

    fn set(rows: &[[f64; 3]], rhs: &[f64]) -> ConstraintSet {
        ConstraintSet {
            matrix: Mat::from_fn(rows.len(), 3, |i, j| rows[i][j]),
            rhs: rhs.to_vec(),
            kinds: vec![ConstraintKind::Boundary; rows.len()],
            points: vec![vec![0.0]; rows.len()],
        }
    }

    #[test]
    fn single_constraint_without_data() {
        let basis = basis3();
        let c = set(&[[1.0, 0.0, 0.0]], &[5.0]);
        let fit = fit_kkt(&basis, &DesignMatrix::empty(3), &[], &c, &SolverConfig::default()).unwrap();
        let b = fit.model.coefficients();
        assert!((b[0] - 5.0).abs() < 1e-9 && b[1].abs() < 1e-9 && b[2].abs() < 1e-9);
        assert_eq!(fit.multipliers.len(), 1);
        assert!(fit.multipliers[0].is_finite());
        assert!(!fit.diagnostics.overconstrained);
    }

    #[test]
    fn inconsistent_duplicates_resolve_midway() {
        let basis = basis3();
        let c = set(&[[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]], &[1.0, 3.0]);
        let fit = fit_kkt(&basis, &DesignMatrix::empty(3), &[], &c, &SolverConfig::default()).unwrap();
        assert!((fit.model.coefficients()[0] - 2.0).abs() < 1e-9);
        assert!(fit.diagnostics.overconstrained);
        assert!((fit.diagnostics.bc_residual_mse - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stage_timings_recorded() {
        let basis = basis3();
        let c = set(&[[0.0, 1.0, 0.0]], &[1.0]);
        let fit = fit_kkt(&basis, &DesignMatrix::empty(3), &[], &c, &SolverConfig::default()).unwrap();
        for stage in ["assemble", "solve", "total"] {
            assert!(fit.diagnostics.timing(stage).is_some(), "{stage}");
        }
    }
}
