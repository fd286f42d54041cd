//! Polynomial chaos basis: germ maps, orthonormal univariate families,
//! hyperbolic multi-index sets and design-matrix assembly.

mod input;
mod multi_index;
mod univariate;

pub use input::{germ_map, InputDim, InputSpec, Marginal, DEFAULT_SUPPORT_TOLERANCE};
pub use multi_index::{binomial, canonical_cmp, gen_multi_indices, MultiIndex, MultiIndexSet};
pub use univariate::{eval_univariate, Family, UnivariateTable};

use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use input::germ_map_dim;

/// Truncated tensor-product basis over an [`InputSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    input: InputSpec,
    order: usize,
    q: f64,
    indices: MultiIndexSet,
    max_degrees: Vec<usize>,
}

impl BasisSpec {
    /// Basis of all multi-indices with hyperbolic q-norm at most `order`.
    pub fn new(input: InputSpec, order: usize, q: f64) -> Result<Self> {
        let indices = gen_multi_indices(input.len(), order, q)?;
        Self::with_indices(input, order, q, indices)
    }

    /// Basis over an explicit index set, e.g. one read back from disk.
    pub fn with_indices(input: InputSpec, order: usize, q: f64, indices: MultiIndexSet) -> Result<Self> {
        if indices.dim() != input.len() {
            return Err(Error::DimensionMismatch {
                what: "basis index set",
                expected: input.len(),
                found: indices.dim(),
            });
        }
        if indices.is_empty() {
            return Err(Error::InvalidInput("basis has no terms".into()));
        }
        let max_degrees = (0..input.len()).map(|d| indices.max_degree(d)).collect();
        Ok(Self { input, order, q, indices, max_degrees })
    }

    pub fn input(&self) -> &InputSpec {
        &self.input
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn indices(&self) -> &MultiIndexSet {
        &self.indices
    }

    /// Number of basis functions.
    pub fn cardinality(&self) -> usize {
        self.indices.len()
    }

    pub fn dim(&self) -> usize {
        self.input.len()
    }

    /// Precomputes univariate values and derivatives at one physical point.
    pub fn point_tables(&self, point: &[f64], max_deriv: &[usize]) -> Result<PointTables> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "point coordinates",
                expected: self.dim(),
                found: point.len(),
            });
        }
        let mut tables = Vec::with_capacity(self.dim());
        let mut scales = Vec::with_capacity(self.dim());
        for (d, &x) in point.iter().enumerate() {
            let marginal = self.input.marginal(d);
            let (xi, scale) = germ_map_dim(marginal, x, DEFAULT_SUPPORT_TOLERANCE, d)?;
            let md = max_deriv.get(d).copied().unwrap_or(0);
            tables.push(UnivariateTable::new(marginal.family(), self.max_degrees[d], md, xi));
            scales.push(scale);
        }
        Ok(PointTables { tables, scales })
    }

    /// Adds `weight` times the (physically differentiated) basis row to `out`.
    pub fn accumulate_row(&self, tables: &PointTables, deriv: &[usize], weight: f64, out: &mut [f64]) {
        let mut factor = weight;
        for (d, &k) in deriv.iter().enumerate() {
            if k > 0 {
                factor *= tables.scales[d].powi(k as i32);
            }
        }
        if factor == 0.0 {
            return;
        }
        for (slot, alpha) in out.iter_mut().zip(self.indices.iter()) {
            let mut v = factor;
            for (d, &a) in alpha.degrees().iter().enumerate() {
                let k = deriv[d];
                if k > a {
                    v = 0.0;
                    break;
                }
                v *= tables.tables[d].get(a, k);
            }
            *slot += v;
        }
    }

    /// Single basis row (or derivative row) at a physical point.
    pub fn row(&self, point: &[f64], deriv: &[usize]) -> Result<Vec<f64>> {
        self.check_deriv(deriv)?;
        let tables = self.point_tables(point, deriv)?;
        let mut out = vec![0.0; self.cardinality()];
        self.accumulate_row(&tables, deriv, 1.0, &mut out);
        Ok(out)
    }

    pub(crate) fn check_deriv(&self, deriv: &[usize]) -> Result<()> {
        if deriv.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "derivative orders",
                expected: self.dim(),
                found: deriv.len(),
            });
        }
        Ok(())
    }
}

/// Univariate tables and chain-rule scales for one point.
#[derive(Debug, Clone)]
pub struct PointTables {
    tables: Vec<UnivariateTable>,
    scales: Vec<f64>,
}

/// Basis functions (or one of their derivatives) evaluated at a point list.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub values: Mat<f64>,
    pub points: Vec<Vec<f64>>,
}

impl DesignMatrix {
    /// Design matrix with no rows.
    pub fn empty(cardinality: usize) -> Self {
        Self { values: Mat::zeros(0, cardinality), points: Vec::new() }
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Appends the rows of `other` below `self`.
    pub fn stacked(&self, other: &DesignMatrix) -> Result<DesignMatrix> {
        if self.ncols() != other.ncols() {
            return Err(Error::DimensionMismatch {
                what: "design matrix columns",
                expected: self.ncols(),
                found: other.ncols(),
            });
        }
        let n1 = self.nrows();
        let values = Mat::from_fn(n1 + other.nrows(), self.ncols(), |i, j| {
            if i < n1 {
                self.values[(i, j)]
            } else {
                other.values[(i - n1, j)]
            }
        });
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        Ok(DesignMatrix { values, points })
    }
}

/// Entry `(j, k)` is `∂^deriv Ψ_{α_k}` at `points[j]`, in physical coordinates.
pub fn build_design_matrix(basis: &BasisSpec, points: &[Vec<f64>], deriv: &[usize]) -> Result<DesignMatrix> {
    basis.check_deriv(deriv)?;
    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .map(|p| {
            let tables = basis.point_tables(p, deriv)?;
            let mut row = vec![0.0; basis.cardinality()];
            basis.accumulate_row(&tables, deriv, 1.0, &mut row);
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(DesignMatrix {
        values: rows_to_mat(&rows, basis.cardinality()),
        points: points.to_vec(),
    })
}

pub(crate) fn rows_to_mat(rows: &[Vec<f64>], ncols: usize) -> Mat<f64> {
    Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_beam_basis(order: usize) -> BasisSpec {
        let input = InputSpec::from_pairs([("x", Marginal::deterministic(0.0, 1.0).unwrap())]).unwrap();
        BasisSpec::new(input, order, 1.0).unwrap()
    }

    #[test]
    fn midpoint_row() {
        let basis = unit_beam_basis(1);
        let dm = build_design_matrix(&basis, &[vec![0.5]], &[0]).unwrap();
        assert_relative_eq!(dm.values[(0, 0)], 1.0);
        assert!(dm.values[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn physical_derivative_row() {
        let basis = unit_beam_basis(1);
        let dm = build_design_matrix(&basis, &[vec![0.5]], &[1]).unwrap();
        assert_eq!(dm.values[(0, 0)], 0.0);
        assert_relative_eq!(dm.values[(0, 1)], 2.0 * 3f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn two_dim_origin_row() {
        let input = InputSpec::from_pairs([
            ("x", Marginal::deterministic(-1.0, 1.0).unwrap()),
            ("z", Marginal::gaussian(0.0, 1.0).unwrap()),
        ])
        .unwrap();
        let basis = BasisSpec::new(input, 1, 1.0).unwrap();
        let dm = build_design_matrix(&basis, &[vec![0.0, 0.0]], &[0, 0]).unwrap();
        let row: Vec<f64> = (0..3).map(|k| dm.values[(0, k)]).collect();
        assert_eq!(row, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let basis = unit_beam_basis(2);
        assert!(build_design_matrix(&basis, &[vec![0.5, 0.1]], &[0]).is_err());
        assert!(build_design_matrix(&basis, &[vec![0.5]], &[0, 0]).is_err());
        assert!(build_design_matrix(&basis, &[vec![1.5]], &[0]).is_err());
    }
}
