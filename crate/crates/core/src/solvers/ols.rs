use super::{check_shapes, finish_fit, FitResult, GramFactor, SolverConfig, Stopwatch};
use crate::basis::{BasisSpec, DesignMatrix};
use crate::error::{Error, Result};
use crate::linalg::{column, to_vec};

/// Ordinary least squares through the (regularized) normal equations.
pub fn fit_ols(basis: &BasisSpec, design: &DesignMatrix, targets: &[f64], config: &SolverConfig) -> Result<FitResult> {
    config.validate()?;
    check_shapes(basis, design, targets)?;
    if design.nrows() == 0 {
        return Err(Error::InvalidInput("ordinary least squares needs at least one data row".into()));
    }
    let mut watch = Stopwatch::start();
    let factor = GramFactor::new(design.values.as_ref(), targets, config.ridge, config.rank_tol)?;
    watch.lap("factorize");
    let beta = to_vec(factor.solve(column(factor.projected_targets()).as_ref()).as_ref());
    watch.lap("solve");
    finish_fit(basis, design, targets, None, beta, Vec::new(), factor.ridge(), false, watch.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_design_matrix, InputSpec, Marginal};
    use faer::Mat;

    fn line_basis() -> BasisSpec {
        let input = InputSpec::from_pairs([("x", Marginal::uniform(-1.0, 1.0).unwrap())]).unwrap();
        BasisSpec::new(input, 1, 1.0).unwrap()
    }

    #[test]
    fn recovers_line_coefficients() {
        let basis = line_basis();
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![-0.9 + 0.2 * i as f64]).collect();
        let y: Vec<f64> = pts.iter().map(|p| 2.0 + 3.0 * p[0]).collect();
        let dm = build_design_matrix(&basis, &pts, &[0]).unwrap();
        let fit = fit_ols(&basis, &dm, &y, &SolverConfig::default()).unwrap();
        let beta = fit.model.coefficients();
        assert!((beta[0] - 2.0).abs() < 1e-12);
        assert!((beta[1] - 3.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(fit.multipliers.is_empty());
        assert!(fit.diagnostics.data_mse < 1e-24);
    }

    #[test]
    fn identity_design_returns_targets() {
        let basis = line_basis();
        let dm = DesignMatrix { values: Mat::identity(2, 2), points: vec![vec![0.0], vec![0.5]] };
        let fit = fit_ols(&basis, &dm, &[4.0, -1.5], &SolverConfig::default()).unwrap();
        assert_eq!(fit.diagnostics.ridge, 0.0);
        assert!((fit.model.coefficients()[0] - 4.0).abs() < 1e-14);
        assert!((fit.model.coefficients()[1] + 1.5).abs() < 1e-14);
    }

    #[test]
    fn duplicated_column_gives_minimum_norm() {
        let basis = line_basis();
        let values = Mat::from_fn(3, 2, |i, _| i as f64 + 1.0);
        let dm = DesignMatrix { values, points: vec![vec![0.0]; 3] };
        let fit = fit_ols(&basis, &dm, &[2.0, 4.0, 6.0], &SolverConfig::default()).unwrap();
        let b = fit.model.coefficients();
        // any β with β0 + β1 = 2 fits exactly; the minimum-norm one splits evenly
        assert!((b[0] - 1.0).abs() < 1e-6 && (b[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_rows_is_an_error() {
        let basis = line_basis();
        assert!(fit_ols(&basis, &DesignMatrix::empty(2), &[], &SolverConfig::default()).is_err());
    }
}
