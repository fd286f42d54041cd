use super::{fit, FitResult, SolverConfig};
use crate::basis::{BasisSpec, DesignMatrix};
use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::model::Pc2Model;

/// Everything needed for one fit at a given order.
#[derive(Debug, Clone)]
pub struct TrainingSystem {
    pub basis: BasisSpec,
    pub design: DesignMatrix,
    pub targets: Vec<f64>,
    pub constraints: Option<ConstraintSet>,
}

/// Held-out mean-square errors of a fitted model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationErrors {
    pub data: f64,
    pub pde: f64,
    pub bc: f64,
}

impl ValidationErrors {
    pub fn sum(&self) -> f64 {
        self.data + self.pde + self.bc
    }
}

/// A problem that can rebuild its training system for any order and score a
/// model on its own validation points.
pub trait AdaptiveProblem {
    fn system(&self, order: usize) -> Result<TrainingSystem>;
    fn validation_errors(&self, model: &Pc2Model) -> Result<ValidationErrors>;
}

/// Raises the order from `min_order` until all validation errors fall below
/// their thresholds. If none qualifies, the order with the smallest error sum
/// is returned with a warning.
pub fn fit_adaptive<P: AdaptiveProblem + ?Sized>(problem: &P, config: &SolverConfig) -> Result<FitResult> {
    let ad = config
        .adaptivity
        .ok_or_else(|| Error::InvalidInput("adaptive fit requires an adaptivity configuration".into()))?;
    config.validate()?;
    let mut best: Option<(f64, FitResult)> = None;
    for order in ad.min_order..=ad.max_order {
        let sys = problem.system(order)?;
        let mut result = fit(&sys.basis, &sys.design, &sys.targets, sys.constraints.as_ref(), config)?;
        let err = problem.validation_errors(&result.model)?;
        result.diagnostics.chosen_order = order;
        if err.data < ad.eps_data && err.pde < ad.eps_pde && err.bc < ad.eps_bc {
            return Ok(result);
        }
        let score = if err.sum().is_nan() { f64::INFINITY } else { err.sum() };
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, result));
        }
    }
    let (_, mut result) = best.expect("order range is nonempty");
    result.diagnostics.warnings.push(format!(
        "thresholds not met for orders {}..={}; using order {}",
        ad.min_order, ad.max_order, result.diagnostics.chosen_order
    ));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_design_matrix, InputSpec, Marginal};
    use crate::solvers::{Adaptivity, Method};

    /// Noise-free cubic data on [−1, 1].
    struct Cubic;

    fn points() -> Vec<Vec<f64>> {
        (0..40).map(|i| vec![-1.0 + 2.0 * i as f64 / 39.0]).collect()
    }

    fn truth(x: f64) -> f64 {
        1.0 - x + 0.3 * x * x + 0.5 * x * x * x
    }

    impl AdaptiveProblem for Cubic {
        fn system(&self, order: usize) -> Result<TrainingSystem> {
            let input = InputSpec::from_pairs([("x", Marginal::deterministic(-1.0, 1.0)?)])?;
            let basis = BasisSpec::new(input, order, 1.0)?;
            let pts = points();
            let design = build_design_matrix(&basis, &pts, &[0])?;
            let targets = pts.iter().map(|p| truth(p[0])).collect();
            Ok(TrainingSystem { basis, design, targets, constraints: None })
        }

        fn validation_errors(&self, model: &Pc2Model) -> Result<ValidationErrors> {
            let pts: Vec<Vec<f64>> = (0..25).map(|i| vec![-0.97 + 0.08 * i as f64]).collect();
            let pred = model.predict(&pts)?;
            let data = pts.iter().zip(&pred).map(|(p, v)| (v - truth(p[0])).powi(2)).sum::<f64>() / 25.0;
            Ok(ValidationErrors { data, pde: 0.0, bc: 0.0 })
        }
    }

    fn config(min_order: usize, max_order: usize, eps: f64) -> SolverConfig {
        SolverConfig {
            adaptivity: Some(Adaptivity { min_order, max_order, eps_data: eps, eps_pde: eps, eps_bc: eps }),
            ..SolverConfig::with_method(Method::Ols)
        }
    }

    #[test]
    fn infinite_thresholds_stop_at_min_order() {
        let r = fit_adaptive(&Cubic, &config(1, 5, f64::INFINITY)).unwrap();
        assert_eq!(r.diagnostics.chosen_order, 1);
        assert!(r.diagnostics.warnings.is_empty());
    }

    #[test]
    fn stops_at_exact_order() {
        let r = fit_adaptive(&Cubic, &config(1, 6, 1e-20)).unwrap();
        assert_eq!(r.diagnostics.chosen_order, 3);
    }

    #[test]
    fn order_cap_returns_best_with_warning() {
        let r = fit_adaptive(&Cubic, &config(0, 2, 1e-20)).unwrap();
        assert_eq!(r.diagnostics.chosen_order, 2);
        assert_eq!(r.diagnostics.warnings.len(), 1);
    }

    #[test]
    fn missing_adaptivity_is_an_error() {
        assert!(fit_adaptive(&Cubic, &SolverConfig::default()).is_err());
    }
}
