//! Linear differential operators and assembly of the equality-constraint
//! system `A β = c` from PDE, boundary and initial conditions.

use std::fmt;
use std::sync::Arc;

use faer::Mat;
use rayon::prelude::*;

use crate::basis::{rows_to_mat, BasisSpec};
use crate::error::{Error, Result};

/// Scalar function of a physical point.
pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Wraps a closure as a [`PointFn`].
pub fn point_fn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> PointFn {
    Arc::new(f)
}

/// `coeff(x) · ∂^deriv u(x)`.
#[derive(Clone)]
pub struct OperatorTerm {
    pub coeff: PointFn,
    pub deriv: Vec<usize>,
}

impl OperatorTerm {
    pub fn new(coeff: PointFn, deriv: Vec<usize>) -> Self {
        Self { coeff, deriv }
    }

    pub fn constant(c: f64, deriv: Vec<usize>) -> Self {
        Self { coeff: point_fn(move |_| c), deriv }
    }
}

impl fmt::Debug for OperatorTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorTerm").field("deriv", &self.deriv).finish_non_exhaustive()
    }
}

/// `Σ_t coeff_t(x) ∂^{deriv_t} u(x) = rhs(x)`.
#[derive(Clone)]
pub struct LinearOperator {
    terms: Vec<OperatorTerm>,
    rhs: PointFn,
}

impl LinearOperator {
    pub fn new(terms: Vec<OperatorTerm>, rhs: PointFn) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidInput("linear operator needs at least one term".into()));
        }
        let dim = terms[0].deriv.len();
        if let Some(t) = terms.iter().find(|t| t.deriv.len() != dim) {
            return Err(Error::DimensionMismatch {
                what: "operator term derivative orders",
                expected: dim,
                found: t.deriv.len(),
            });
        }
        Ok(Self { terms, rhs })
    }

    /// `u(x) = rhs(x)`.
    pub fn identity(dim: usize, rhs: PointFn) -> Self {
        Self { terms: vec![OperatorTerm::constant(1.0, vec![0; dim])], rhs }
    }

    /// `∂^deriv u(x) = rhs(x)`.
    pub fn derivative(deriv: Vec<usize>, rhs: PointFn) -> Self {
        Self { terms: vec![OperatorTerm::constant(1.0, deriv)], rhs }
    }

    pub fn terms(&self) -> &[OperatorTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.terms[0].deriv.len()
    }

    pub fn rhs_at(&self, point: &[f64]) -> f64 {
        (self.rhs)(point)
    }

    fn max_deriv(&self) -> Vec<usize> {
        let mut m = vec![0; self.dim()];
        for t in &self.terms {
            for (slot, &k) in m.iter_mut().zip(&t.deriv) {
                *slot = (*slot).max(k);
            }
        }
        m
    }
}

impl fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearOperator").field("terms", &self.terms).finish_non_exhaustive()
    }
}

/// Unit derivative order vector: `order` in dimension `dim`, zero elsewhere.
pub fn deriv_on(dim_count: usize, dim: usize, order: usize) -> Vec<usize> {
    let mut d = vec![0; dim_count];
    d[dim] = order;
    d
}

/// Origin of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    Pde,
    Boundary,
    Initial,
}

impl ConstraintKind {
    pub fn label(self) -> &'static str {
        match self {
            ConstraintKind::Pde => "PDE",
            ConstraintKind::Boundary => "BC",
            ConstraintKind::Initial => "IC",
        }
    }
}

/// One operator applied at a list of points.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintBlock<'a> {
    pub op: &'a LinearOperator,
    pub points: &'a [Vec<f64>],
    pub kind: ConstraintKind,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AssemblyOptions {
    /// Scale each row (and its right-hand side) to unit ℓ2 norm.
    pub normalize_rows: bool,
}

/// Assembled constraint matrix, right-hand side and row bookkeeping.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub matrix: Mat<f64>,
    pub rhs: Vec<f64>,
    pub kinds: Vec<ConstraintKind>,
    pub points: Vec<Vec<f64>>,
}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.kinds.iter().filter(|&&k| k == kind).count()
    }

    /// `A β - c`.
    pub fn residual(&self, coefficients: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let mut s = -self.rhs[i];
                for (k, b) in coefficients.iter().enumerate() {
                    s += self.matrix[(i, k)] * b;
                }
                s
            })
            .collect()
    }
}

/// Constraint row of `op` at `point`: `row · β = rhs`.
pub fn apply_operator_row(op: &LinearOperator, basis: &BasisSpec, point: &[f64]) -> Result<(Vec<f64>, f64)> {
    if op.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            what: "operator dimension",
            expected: basis.dim(),
            found: op.dim(),
        });
    }
    let tables = basis.point_tables(point, &op.max_deriv())?;
    let mut row = vec![0.0; basis.cardinality()];
    for term in op.terms() {
        let c = (term.coeff)(point);
        if !c.is_finite() {
            return Err(Error::Evaluation { what: "operator coefficient", point: point.to_vec() });
        }
        basis.accumulate_row(&tables, &term.deriv, c, &mut row);
    }
    let rhs = op.rhs_at(point);
    if !rhs.is_finite() {
        return Err(Error::Evaluation { what: "operator right-hand side", point: point.to_vec() });
    }
    Ok((row, rhs))
}

/// Stacks all blocks into one [`ConstraintSet`], PDE rows first, then
/// boundary, then initial; within a kind, blocks and points keep their
/// input order.
pub fn assemble(blocks: &[ConstraintBlock<'_>], basis: &BasisSpec, options: AssemblyOptions) -> Result<ConstraintSet> {
    let mut ordered: Vec<&ConstraintBlock<'_>> = blocks.iter().collect();
    ordered.sort_by_key(|b| b.kind);

    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut kinds = Vec::new();
    let mut points = Vec::new();
    for block in ordered {
        let assembled: Vec<(Vec<f64>, f64)> = block
            .points
            .par_iter()
            .map(|p| apply_operator_row(block.op, basis, p))
            .collect::<Result<_>>()?;
        for ((mut row, mut c), p) in assembled.into_iter().zip(block.points) {
            if options.normalize_rows {
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|v| *v /= norm);
                    c /= norm;
                }
            }
            rows.push(row);
            rhs.push(c);
            kinds.push(block.kind);
            points.push(p.clone());
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyConstraints);
    }
    Ok(ConstraintSet {
        matrix: rows_to_mat(&rows, basis.cardinality()),
        rhs,
        kinds,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_design_matrix, InputSpec, Marginal};

    fn toy_basis() -> BasisSpec {
        let input = InputSpec::from_pairs([
            ("x", Marginal::deterministic(0.0, 1.0).unwrap()),
            ("q", Marginal::uniform(1.0, 2.0).unwrap()),
        ])
        .unwrap();
        BasisSpec::new(input, 6, 1.0).unwrap()
    }

    #[test]
    fn identity_row_is_plain_basis_row() {
        let basis = toy_basis();
        let op = LinearOperator::identity(2, point_fn(|p| p[0] + p[1]));
        let point = vec![0.3, 1.4];
        let (row, rhs) = apply_operator_row(&op, &basis, &point).unwrap();
        let dm = build_design_matrix(&basis, &[point], &[0, 0]).unwrap();
        for k in 0..basis.cardinality() {
            assert_eq!(row[k], dm.values[(0, k)]);
        }
        assert!((rhs - 1.7).abs() < 1e-15);
    }

    #[test]
    fn beam_operator_rhs() {
        let basis = toy_basis();
        let op = LinearOperator::new(
            vec![OperatorTerm::constant(1.0, vec![4, 0]), OperatorTerm::constant(0.0, vec![0, 0])],
            point_fn(|p| -p[1]),
        )
        .unwrap();
        let (_, rhs) = apply_operator_row(&op, &basis, &[0.3, 1.5]).unwrap();
        assert_eq!(rhs, -1.5);
    }

    #[test]
    fn single_point_block() {
        let basis = toy_basis();
        let op = LinearOperator::identity(2, point_fn(|_| 0.0));
        let pts = vec![vec![0.0, 1.2]];
        let set = assemble(
            &[ConstraintBlock { op: &op, points: &pts, kind: ConstraintKind::Boundary }],
            &basis,
            AssemblyOptions::default(),
        )
        .unwrap();
        assert_eq!(set.matrix.nrows(), 1);
        assert_eq!(set.matrix.ncols(), basis.cardinality());
    }

    #[test]
    fn empty_assembly_is_reported() {
        let basis = toy_basis();
        let op = LinearOperator::identity(2, point_fn(|_| 0.0));
        let err = assemble(
            &[ConstraintBlock { op: &op, points: &[], kind: ConstraintKind::Pde }],
            &basis,
            AssemblyOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyConstraints));
    }

    #[test]
    fn rows_ordered_by_kind() {
        let basis = toy_basis();
        let op = LinearOperator::identity(2, point_fn(|_| 1.0));
        let a = vec![vec![0.1, 1.1], vec![0.2, 1.2]];
        let b = vec![vec![0.3, 1.3]];
        let set = assemble(
            &[
                ConstraintBlock { op: &op, points: &b, kind: ConstraintKind::Boundary },
                ConstraintBlock { op: &op, points: &a, kind: ConstraintKind::Pde },
            ],
            &basis,
            AssemblyOptions::default(),
        )
        .unwrap();
        assert_eq!(set.kinds, vec![ConstraintKind::Pde, ConstraintKind::Pde, ConstraintKind::Boundary]);
        assert_eq!(set.points[2], vec![0.3, 1.3]);
        assert_eq!(set.count(ConstraintKind::Pde), 2);
    }

    #[test]
    fn normalized_rows_have_unit_norm() {
        let basis = toy_basis();
        let op = LinearOperator::derivative(vec![2, 0], point_fn(|_| 3.0));
        let pts = vec![vec![0.4, 1.7]];
        let set = assemble(
            &[ConstraintBlock { op: &op, points: &pts, kind: ConstraintKind::Pde }],
            &basis,
            AssemblyOptions { normalize_rows: true },
        )
        .unwrap();
        let norm: f64 = (0..set.ncols()).map(|k| set.matrix[(0, k)].powi(2)).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let (raw, _) = apply_operator_row(&op, &basis, &pts[0]).unwrap();
        let raw_norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((set.rhs[0] - 3.0 / raw_norm).abs() < 1e-12);
    }

    #[test]
    fn non_finite_rhs_is_an_error() {
        let basis = toy_basis();
        let op = LinearOperator::identity(2, point_fn(|_| f64::NAN));
        assert!(matches!(
            apply_operator_row(&op, &basis, &[0.5, 1.5]),
            Err(Error::Evaluation { .. })
        ));
    }
}
