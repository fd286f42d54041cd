use crate::basis::{build_design_matrix, BasisSpec};
use crate::error::{Error, Result};
use crate::linalg::mat_vec;

/// Fitted expansion `u(x) = Σ_α β_α Ψ_α(ξ(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pc2Model {
    basis: BasisSpec,
    coefficients: Vec<f64>,
}

impl Pc2Model {
    pub fn new(basis: BasisSpec, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.cardinality() {
            return Err(Error::DimensionMismatch {
                what: "coefficient vector",
                expected: basis.cardinality(),
                found: coefficients.len(),
            });
        }
        Ok(Self { basis, coefficients })
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn predict(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.predict_derivative(points, &vec![0; self.basis.dim()])
    }

    /// Physical-coordinate derivative of the surrogate.
    pub fn predict_derivative(&self, points: &[Vec<f64>], deriv: &[usize]) -> Result<Vec<f64>> {
        let dm = build_design_matrix(&self.basis, points, deriv)?;
        Ok(mat_vec(dm.values.as_ref(), &self.coefficients))
    }
}
