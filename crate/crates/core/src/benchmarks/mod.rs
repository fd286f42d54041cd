//! The five benchmark problems, their reference solutions, error metrics
//! and moment extraction, plus an end-to-end experiment runner.

mod experiment;
mod fd;
mod metrics;
mod moments;
mod problems;
mod reference;

pub use experiment::{
    build_system, evaluate, evaluation_points, fit_problem_adaptive, run_experiment, ExperimentConfig,
    ExperimentOutcome, IcMode,
};
pub use fd::{fd_beam, fd_heat, BeamSolution, FdHeatSettings, HeatBoundary, HeatSolution};
pub use metrics::{metrics, metrics_by_region, ErrorStats, MetricReport, RAE_EXCLUSION};
pub use moments::{moment_fields, MomentFields};
pub use problems::{
    beam_mean_stiffness_deflection, beam_stiffness_field, heat_source_field, problem_beam_kl, problem_by_name, problem_heat_dirichlet, problem_heat_kl_source, problem_heat_neumann,
    problem_toy_beam, ProblemOptions, BEAM_LENGTH, BEAM_LOAD, BEAM_MEAN_STIFFNESS, PROBLEM_NAMES,
};
pub use reference::{BeamReference, HeatParameters, HeatReference, ReferenceSolution};

use std::fmt;
use std::sync::Arc;

use crate::basis::InputSpec;
use crate::constraints::{LinearOperator, PointFn};
use crate::error::Result;
use crate::sampling::Facet;

/// One boundary condition: an operator enforced on a facet.
#[derive(Clone, Debug)]
pub struct BoundaryCondition {
    pub facet: Facet,
    pub op: LinearOperator,
}

/// `u = value` on the initial facet.
#[derive(Clone)]
pub struct InitialCondition {
    pub facet: Facet,
    pub value: PointFn,
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialCondition").field("facet", &self.facet).finish_non_exhaustive()
    }
}

/// Reference values for error measurement.
#[derive(Clone)]
pub enum Reference {
    Analytic(PointFn),
    /// Numerical solutions computed per realization of the random inputs.
    Numerical(Arc<dyn ReferenceSolution>),
}

impl Reference {
    pub fn evaluate(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        match self {
            Reference::Analytic(f) => Ok(points.iter().map(|p| f(p)).collect()),
            Reference::Numerical(r) => r.evaluate(points),
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, Reference::Analytic(_))
    }
}

impl fmt::Debug for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reference::Analytic(_) => "Analytic",
            Reference::Numerical(_) => "Numerical",
        })
    }
}

/// Default surrogate settings for a problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pc2Defaults {
    pub order: usize,
    pub q: f64,
    pub n_v: usize,
    pub n_bc: usize,
    pub n_init: usize,
    /// Training values drawn from reference solutions (hybrid mode); 0 for
    /// purely physics-informed training.
    pub n_data: usize,
}

#[derive(Clone, Debug)]
pub struct ProblemDef {
    pub name: &'static str,
    pub input: InputSpec,
    pub pde: LinearOperator,
    pub boundary: Vec<BoundaryCondition>,
    pub initial: Option<InitialCondition>,
    pub reference: Reference,
    pub defaults: Pc2Defaults,
    /// Deterministic spatial dimensions.
    pub spatial_dims: Vec<usize>,
    pub time_dim: Option<usize>,
    /// Random-input realizations in the evaluation design of numerical
    /// references (each needs its own solve).
    pub eval_realizations: usize,
}

impl ProblemDef {
    pub fn facets(&self) -> Vec<Facet> {
        self.boundary.iter().map(|b| b.facet).collect()
    }

    /// Whether `point` lies within 2% of a spatial boundary.
    pub fn near_boundary(&self, point: &[f64]) -> bool {
        self.spatial_dims.iter().any(|&d| match self.input.marginal(d).bounds() {
            Some((lo, hi)) => {
                let band = 0.02 * (hi - lo);
                point[d] - lo < band || hi - point[d] < band
            }
            None => false,
        })
    }
}
