//! Sampling, assembly, fitting and evaluation of one benchmark run.

use std::time::Instant;

use super::{metrics_by_region, MetricReport, ProblemDef};
use crate::basis::{build_design_matrix, BasisSpec, DesignMatrix};
use crate::constraints::{assemble, AssemblyOptions, ConstraintBlock, ConstraintKind, ConstraintSet, LinearOperator};
use crate::error::{Error, Result};
use crate::model::Pc2Model;
use crate::sampling::{plan_points, rng_for, sample_on_facet, sample_with, CandidateRows, PlanDomain, SamplePlan, Strategy};
use crate::solvers::{fit, fit_adaptive, AdaptiveProblem, FitResult, Method, SolverConfig, TrainingSystem, ValidationErrors};

/// Treatment of initial-condition points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IcMode {
    /// Appended to the regression data.
    #[default]
    Soft,
    /// Enforced as equality constraints.
    Hard,
}

impl std::str::FromStr for IcMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "soft" => Ok(IcMode::Soft),
            "hard" => Ok(IcMode::Hard),
            other => Err(Error::InvalidInput(format!("unknown initial-condition mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for IcMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IcMode::Soft => "soft",
            IcMode::Hard => "hard",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub order: usize,
    pub q: f64,
    pub n_v: usize,
    pub n_bc: usize,
    pub n_init: usize,
    pub n_data: usize,
    pub ic_mode: IcMode,
    pub strategy: Strategy,
    pub oversample_k: usize,
    pub candidate_rows: CandidateRows,
    pub normalize_rows: bool,
    pub solver: SolverConfig,
    pub n_eval: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// The problem's default settings with the given method.
    pub fn for_problem(problem: &ProblemDef, method: Method) -> Self {
        let d = problem.defaults;
        Self {
            order: d.order,
            q: d.q,
            n_v: d.n_v,
            n_bc: d.n_bc,
            n_init: d.n_init,
            n_data: d.n_data,
            ic_mode: IcMode::Soft,
            strategy: Strategy::Random,
            oversample_k: 3,
            candidate_rows: CandidateRows::Operator,
            normalize_rows: false,
            solver: SolverConfig::with_method(method),
            n_eval: 10_000,
            seed: 0,
        }
    }

    fn plan(&self) -> SamplePlan {
        let (n_ic, n_init) = match self.ic_mode {
            IcMode::Soft => (0, self.n_init),
            IcMode::Hard => (self.n_init, 0),
        };
        SamplePlan {
            n_v: self.n_v,
            n_bc: self.n_bc,
            n_ic,
            n_init,
            strategy: self.strategy,
            oversample_k: self.oversample_k,
            candidate_rows: self.candidate_rows,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub fit: FitResult,
    pub report: MetricReport,
    /// Wall time of the solver call alone.
    pub fit_seconds: f64,
    /// Sampling, assembly, fit and evaluation.
    pub total_seconds: f64,
    pub cardinality: usize,
    pub n_constraints: usize,
    pub n_data_rows: usize,
}

fn initial_op(problem: &ProblemDef) -> Option<LinearOperator> {
    problem.initial.as_ref().map(|ic| LinearOperator::identity(problem.input.len(), ic.value.clone()))
}

/// Samples points and assembles the design matrix, targets and constraints.
pub fn build_system(problem: &ProblemDef, cfg: &ExperimentConfig) -> Result<TrainingSystem> {
    let basis = BasisSpec::new(problem.input.clone(), cfg.order, cfg.q)?;
    let facets = problem.facets();
    let domain = PlanDomain {
        input: &problem.input,
        boundary: &facets,
        initial: problem.initial.as_ref().map(|ic| ic.facet),
        pde: Some(&problem.pde),
    };
    let pts = plan_points(&domain, &cfg.plan(), &basis)?;

    let ic_op = initial_op(problem);
    let mut blocks = vec![ConstraintBlock { op: &problem.pde, points: &pts.virtual_points, kind: ConstraintKind::Pde }];
    for (bc, p) in problem.boundary.iter().zip(&pts.boundary) {
        blocks.push(ConstraintBlock { op: &bc.op, points: p, kind: ConstraintKind::Boundary });
    }
    if let Some(op) = &ic_op {
        blocks.push(ConstraintBlock { op, points: &pts.initial_hard, kind: ConstraintKind::Initial });
    }
    let constraints = match assemble(&blocks, &basis, AssemblyOptions { normalize_rows: cfg.normalize_rows }) {
        Ok(c) => Some(c),
        Err(Error::EmptyConstraints) => None,
        Err(e) => return Err(e),
    };

    let mut data_points = pts.initial_data.clone();
    let mut targets: Vec<f64> = match &problem.initial {
        Some(ic) => data_points.iter().map(|p| (ic.value)(p)).collect(),
        None => Vec::new(),
    };
    if cfg.n_data > 0 {
        let super::Reference::Numerical(r) = &problem.reference else {
            return Err(Error::InvalidInput(format!("problem '{}' has no gridded reference for training data", problem.name)));
        };
        let Some((p, v)) = r.node_samples(cfg.n_data, cfg.seed)? else {
            return Err(Error::InvalidInput(format!("problem '{}' cannot supply training data", problem.name)));
        };
        data_points.extend(p);
        targets.extend(v);
    }
    let zero = vec![0; basis.dim()];
    let design = if data_points.is_empty() {
        DesignMatrix::empty(basis.cardinality())
    } else {
        build_design_matrix(&basis, &data_points, &zero)?
    };
    Ok(TrainingSystem { basis, design, targets, constraints })
}

/// Seeded evaluation design. Analytic references use i.i.d. points over all
/// inputs; numerical ones share `eval_realizations` draws of the random
/// inputs so each needs only a few reference solves.
pub fn evaluation_points(problem: &ProblemDef, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_for(seed, 7);
    let mut pts = sample_with(&problem.input, n, &mut rng);
    if !problem.reference.is_analytic() && problem.eval_realizations > 0 {
        let random = problem.input.random_dims();
        let draws = sample_with(&problem.input, problem.eval_realizations, &mut rng);
        for (i, p) in pts.iter_mut().enumerate() {
            let r = &draws[i % draws.len()];
            for &d in &random {
                p[d] = r[d];
            }
        }
    }
    pts
}

/// Error report of `model` on the seeded evaluation design.
pub fn evaluate(problem: &ProblemDef, model: &Pc2Model, n: usize, seed: u64) -> Result<MetricReport> {
    let pts = evaluation_points(problem, n, seed);
    let pred = model.predict(&pts)?;
    let reference = problem.reference.evaluate(&pts)?;
    let mask: Vec<bool> = pts.iter().map(|p| problem.near_boundary(p)).collect();
    metrics_by_region(&pred, &reference, &mask)
}

/// Builds, fits and evaluates one configuration.
pub fn run_experiment(problem: &ProblemDef, cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let start = Instant::now();
    let sys = build_system(problem, cfg)?;
    let fit_start = Instant::now();
    let fit = fit(&sys.basis, &sys.design, &sys.targets, sys.constraints.as_ref(), &cfg.solver)?;
    let fit_seconds = fit_start.elapsed().as_secs_f64();
    let report = evaluate(problem, &fit.model, cfg.n_eval, cfg.seed)?;
    Ok(ExperimentOutcome {
        fit,
        report,
        fit_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        cardinality: sys.basis.cardinality(),
        n_constraints: sys.constraints.as_ref().map_or(0, ConstraintSet::len),
        n_data_rows: sys.design.nrows(),
    })
}

/// Validation design for the adaptive loop: fresh seeded points per error
/// component.
struct AdaptiveRun<'a> {
    problem: &'a ProblemDef,
    cfg: &'a ExperimentConfig,
    data: (Vec<Vec<f64>>, Vec<f64>),
    virtual_points: Vec<Vec<f64>>,
    boundary: Vec<Vec<Vec<f64>>>,
}

const VALIDATION_POINTS: usize = 1000;

impl<'a> AdaptiveRun<'a> {
    fn new(problem: &'a ProblemDef, cfg: &'a ExperimentConfig) -> Result<Self> {
        let vseed = cfg.seed ^ 0x9e37_79b9_7f4a_7c15;
        let data_pts = evaluation_points(problem, VALIDATION_POINTS, vseed);
        let data_ref = problem.reference.evaluate(&data_pts)?;
        let virtual_points = sample_with(&problem.input, VALIDATION_POINTS, &mut rng_for(vseed, 8));
        let mut brng = rng_for(vseed, 9);
        let sets = problem.boundary.len().max(1);
        let boundary = problem
            .boundary
            .iter()
            .enumerate()
            .map(|(i, bc)| {
                let n = VALIDATION_POINTS / sets + usize::from(i < VALIDATION_POINTS % sets);
                sample_on_facet(&problem.input, bc.facet, n, &mut brng)
            })
            .collect();
        Ok(Self { problem, cfg, data: (data_pts, data_ref), virtual_points, boundary })
    }
}

fn operator_mse(op: &LinearOperator, model: &Pc2Model, points: &[Vec<f64>]) -> Result<f64> {
    if points.is_empty() {
        return Ok(0.0);
    }
    let mut s = 0.0;
    for p in points {
        let (row, rhs) = crate::constraints::apply_operator_row(op, model.basis(), p)?;
        let v: f64 = row.iter().zip(model.coefficients()).map(|(a, b)| a * b).sum();
        s += (v - rhs).powi(2);
    }
    Ok(s / points.len() as f64)
}

impl AdaptiveProblem for AdaptiveRun<'_> {
    fn system(&self, order: usize) -> Result<TrainingSystem> {
        build_system(self.problem, &ExperimentConfig { order, ..self.cfg.clone() })
    }

    fn validation_errors(&self, model: &Pc2Model) -> Result<ValidationErrors> {
        let pred = model.predict(&self.data.0)?;
        let data = pred.iter().zip(&self.data.1).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / pred.len().max(1) as f64;
        let pde = operator_mse(&self.problem.pde, model, &self.virtual_points)?;
        let mut bc_sum = 0.0;
        let mut bc_n = 0usize;
        for (bc, pts) in self.problem.boundary.iter().zip(&self.boundary) {
            bc_sum += operator_mse(&bc.op, model, pts)? * pts.len() as f64;
            bc_n += pts.len();
        }
        let bc = if bc_n == 0 { 0.0 } else { bc_sum / bc_n as f64 };
        Ok(ValidationErrors { data, pde, bc })
    }
}

/// Runs the order-adaptive loop on a benchmark problem. The order range and
/// thresholds come from `cfg.solver.adaptivity`.
pub fn fit_problem_adaptive(problem: &ProblemDef, cfg: &ExperimentConfig) -> Result<FitResult> {
    let run = AdaptiveRun::new(problem, cfg)?;
    fit_adaptive(&run, &cfg.solver)
}
