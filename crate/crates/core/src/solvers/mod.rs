//! Coefficient estimation: ordinary least squares, the blocked KKT system,
//! and straightforward updating of Lagrange multipliers (SULM), plus the
//! p-adaptive order loop.
//!
//! All constrained solvers minimise `½‖Y − Ψβ‖² + ½γ‖β‖²` subject to
//! `Aβ = c`. Multipliers follow the Lagrangian `L = ½M(β) + λᵀ(Aβ − c)`, so
//! stationarity reads `(ΨᵀΨ + γI)β + Aᵀλ = ΨᵀY`.

mod adaptive;
mod gram;
mod kkt;
mod ols;
mod sulm;

pub use adaptive::{fit_adaptive, AdaptiveProblem, TrainingSystem, ValidationErrors};
pub use gram::{resolve_ridge, GramFactor};
pub use kkt::fit_kkt;
pub use ols::fit_ols;
pub use sulm::{fit_sulm, fit_sulm_with};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::basis::{BasisSpec, DesignMatrix};
use crate::constraints::{ConstraintKind, ConstraintSet};
use crate::error::{Error, Result};
use crate::linalg::mat_vec;
use crate::model::Pc2Model;

/// Coefficient estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Ols,
    Kkt,
    Sulm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ols => "OLS",
            Method::Kkt => "KKT",
            Method::Sulm => "SULM",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "OLS" => Ok(Method::Ols),
            "KKT" => Ok(Method::Kkt),
            "SULM" => Ok(Method::Sulm),
            other => Err(Error::InvalidInput(format!("unknown solver method '{other}'"))),
        }
    }
}

/// Tikhonov term `γ` added to the Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ridge {
    /// `0` when Ψ has full column rank, else `1e-12 ×` the mean Gram diagonal.
    Auto,
    Fixed(f64),
}

/// Thresholds and order range for the p-adaptive loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adaptivity {
    pub min_order: usize,
    pub max_order: usize,
    pub eps_data: f64,
    pub eps_pde: f64,
    pub eps_bc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub ridge: Ridge,
    /// Relative cutoff applied to singular values / eigenvalues when a
    /// system is solved in the minimum-norm least-squares sense.
    pub rank_tol: f64,
    pub adaptivity: Option<Adaptivity>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { method: Method::Kkt, ridge: Ridge::Auto, rank_tol: 1e-12, adaptivity: None }
    }
}

impl SolverConfig {
    pub fn with_method(method: Method) -> Self {
        Self { method, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rank_tol >= 0.0) {
            return Err(Error::InvalidInput(format!("rank_tol must be nonnegative, got {}", self.rank_tol)));
        }
        if let Ridge::Fixed(g) = self.ridge {
            if !(g >= 0.0) {
                return Err(Error::InvalidInput(format!("ridge must be nonnegative, got {g}")));
            }
        }
        if let Some(a) = self.adaptivity {
            if a.min_order > a.max_order {
                return Err(Error::InvalidInput(format!(
                    "adaptivity order range is empty: {}..{}",
                    a.min_order, a.max_order
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Quality measures recomputed from the returned coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub data_mse: f64,
    pub pde_residual_mse: f64,
    /// Boundary and hard initial-condition rows.
    pub bc_residual_mse: f64,
    pub chosen_order: usize,
    pub ridge: f64,
    /// Constraint rows are linearly dependent (`rank(A) < n_c`), so they hold
    /// only in a least-squares sense.
    pub overconstrained: bool,
    pub timings: Vec<StageTiming>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn timing(&self, stage: &str) -> Option<f64> {
        self.timings.iter().find(|t| t.stage == stage).map(|t| t.seconds)
    }

    pub fn total_seconds(&self) -> f64 {
        self.timing("total").unwrap_or_else(|| self.timings.iter().map(|t| t.seconds).sum())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: Pc2Model,
    /// Lagrange multipliers, one per constraint row; empty for OLS.
    pub multipliers: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Dispatches on `config.method`; constrained methods fall back to OLS when
/// `constraints` is `None` or empty.
pub fn fit(
    basis: &BasisSpec,
    design: &DesignMatrix,
    targets: &[f64],
    constraints: Option<&ConstraintSet>,
    config: &SolverConfig,
) -> Result<FitResult> {
    match (config.method, constraints) {
        (Method::Ols, _) => fit_ols(basis, design, targets, config),
        (Method::Kkt, Some(c)) => fit_kkt(basis, design, targets, c, config),
        (Method::Sulm, Some(c)) => fit_sulm(basis, design, targets, c, config),
        (_, None) => fit_ols(basis, design, targets, config),
    }
}

pub(crate) fn check_shapes(basis: &BasisSpec, design: &DesignMatrix, targets: &[f64]) -> Result<()> {
    if design.ncols() != basis.cardinality() {
        return Err(Error::DimensionMismatch {
            what: "design matrix columns",
            expected: basis.cardinality(),
            found: design.ncols(),
        });
    }
    if targets.len() != design.nrows() {
        return Err(Error::DimensionMismatch {
            what: "target vector",
            expected: design.nrows(),
            found: targets.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_constraints(basis: &BasisSpec, constraints: &ConstraintSet) -> Result<()> {
    if constraints.ncols() != basis.cardinality() {
        return Err(Error::DimensionMismatch {
            what: "constraint matrix columns",
            expected: basis.cardinality(),
            found: constraints.ncols(),
        });
    }
    Ok(())
}

fn mean_square(v: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in v {
        s += x * x;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Data, PDE and boundary mean-square residuals of `beta`.
pub(crate) fn residual_diagnostics(
    design: &DesignMatrix,
    targets: &[f64],
    constraints: Option<&ConstraintSet>,
    beta: &[f64],
) -> (f64, f64, f64) {
    let fitted = mat_vec(design.values.as_ref(), beta);
    let data = mean_square(fitted.iter().zip(targets).map(|(f, y)| f - y));
    let (pde, bc) = match constraints {
        Some(c) if !c.is_empty() => {
            let r = mat_vec(c.matrix.as_ref(), beta);
            let res: Vec<f64> = r.iter().zip(&c.rhs).map(|(a, b)| a - b).collect();
            let pde = mean_square(
                res.iter().zip(&c.kinds).filter(|(_, k)| **k == ConstraintKind::Pde).map(|(v, _)| *v),
            );
            let bc = mean_square(
                res.iter().zip(&c.kinds).filter(|(_, k)| **k != ConstraintKind::Pde).map(|(v, _)| *v),
            );
            (pde, bc)
        }
        _ => (0.0, 0.0),
    };
    (data, pde, bc)
}

/// Wall-clock stage recorder.
pub(crate) struct Stopwatch {
    start: Instant,
    last: Instant,
    stages: Vec<StageTiming>,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        let now = Instant::now();
        Self { start: now, last: now, stages: Vec::new() }
    }

    pub(crate) fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.stages.push(StageTiming { stage: stage.to_string(), seconds: (now - self.last).as_secs_f64() });
        self.last = now;
    }

    pub(crate) fn finish(mut self) -> Vec<StageTiming> {
        let total = self.start.elapsed().as_secs_f64();
        self.stages.push(StageTiming { stage: "total".into(), seconds: total });
        self.stages
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish_fit(
    basis: &BasisSpec,
    design: &DesignMatrix,
    targets: &[f64],
    constraints: Option<&ConstraintSet>,
    beta: Vec<f64>,
    multipliers: Vec<f64>,
    ridge: f64,
    overconstrained: bool,
    timings: Vec<StageTiming>,
) -> Result<FitResult> {
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Numerical("solver produced non-finite coefficients".into()));
    }
    let (data_mse, pde_residual_mse, bc_residual_mse) = residual_diagnostics(design, targets, constraints, &beta);
    Ok(FitResult {
        model: Pc2Model::new(basis.clone(), beta)?,
        multipliers,
        diagnostics: Diagnostics {
            data_mse,
            pde_residual_mse,
            bc_residual_mse,
            chosen_order: basis.order(),
            ridge,
            overconstrained,
            timings,
            warnings: Vec::new(),
        },
    })
}

/// `true` when the constraint rows are linearly dependent.
pub(crate) fn constraints_dependent(constraints: &ConstraintSet, rank_tol: f64) -> Result<bool> {
    let n_c = constraints.len();
    if n_c > constraints.ncols() {
        return Ok(true);
    }
    let tol = if rank_tol > 0.0 { rank_tol } else { f64::EPSILON };
    Ok(crate::linalg::numerical_rank(constraints.matrix.as_ref(), tol)? < n_c)
}
