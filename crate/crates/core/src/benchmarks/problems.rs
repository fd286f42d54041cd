use std::f64::consts::PI;
use std::sync::Arc;

use super::fd::{FdHeatSettings, HeatBoundary};
use super::reference::{BeamReference, HeatParameters, HeatReference};
use super::{BoundaryCondition, InitialCondition, Pc2Defaults, ProblemDef, Reference};
use crate::basis::{InputDim, InputSpec, Marginal};
use crate::constraints::{deriv_on, point_fn, LinearOperator, OperatorTerm};
use crate::error::{Error, Result};
use crate::randomfield::{field_jet, kl_decompose, realize, Grid, Kernel, KlField, Truncation};
use crate::sampling::Facet;

pub const PROBLEM_NAMES: [&str; 5] = ["toy-beam", "heat-dirichlet", "heat-neumann", "beam-kl", "heat-kl"];

/// Beam length in m.
pub const BEAM_LENGTH: f64 = 10.0;
/// Distributed load in kN/m.
pub const BEAM_LOAD: f64 = -5.0;
/// Mean bending stiffness in kN·m².
pub const BEAM_MEAN_STIFFNESS: f64 = 8000.0;

/// Knobs that change a problem's definition rather than its training.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemOptions {
    /// KL modes of the heat source field.
    pub heat_kl_modes: usize,
    /// Settings of finite-difference heat references.
    pub heat_fd: Option<FdHeatSettings>,
    pub eval_realizations: usize,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        Self { heat_kl_modes: 4, heat_fd: None, eval_realizations: 8 }
    }
}

pub fn problem_by_name(name: &str, options: &ProblemOptions) -> Result<ProblemDef> {
    match name {
        "toy-beam" => problem_toy_beam(),
        "heat-dirichlet" => problem_heat_dirichlet(),
        "heat-neumann" => problem_heat_neumann(options),
        "beam-kl" => problem_beam_kl(options),
        "heat-kl" => problem_heat_kl_source(options),
        other => Err(Error::InvalidInput(format!(
            "unknown problem '{other}' (expected one of {})",
            PROBLEM_NAMES.join(", ")
        ))),
    }
}

fn zero() -> crate::constraints::PointFn {
    point_fn(|_| 0.0)
}

fn facet_conditions(dim_count: usize, facets: &[(usize, f64)], deriv: &[Vec<usize>]) -> Vec<BoundaryCondition> {
    let mut out = Vec::new();
    for d in deriv {
        for &(dim, value) in facets {
            let d = if d.is_empty() { vec![0; dim_count] } else { d.clone() };
            out.push(BoundaryCondition {
                facet: Facet { dim, value },
                op: LinearOperator::derivative(d, zero()),
            });
        }
    }
    out
}

/// `u'''' + q = 0` on `x ∈ [0, 1]`, `q ~ U[1, 2]`, simply supported.
pub fn problem_toy_beam() -> Result<ProblemDef> {
    let input = InputSpec::from_pairs([("x", Marginal::deterministic(0.0, 1.0)?), ("q", Marginal::uniform(1.0, 2.0)?)])?;
    let pde = LinearOperator::new(vec![OperatorTerm::constant(1.0, vec![4, 0])], point_fn(|p| -p[1]))?;
    let mut boundary = Vec::new();
    for deriv in [vec![0, 0], vec![2, 0]] {
        for x in [0.0, 1.0] {
            boundary.push(BoundaryCondition {
                facet: Facet { dim: 0, value: x },
                op: LinearOperator::derivative(deriv.clone(), zero()),
            });
        }
    }
    Ok(ProblemDef {
        name: "toy-beam",
        input,
        pde,
        boundary,
        initial: None,
        reference: Reference::Analytic(point_fn(|p| toy_beam_exact(p[0], p[1]))),
        defaults: Pc2Defaults { order: 6, q: 1.0, n_v: 200, n_bc: 40, n_init: 0, n_data: 0 },
        spatial_dims: vec![0],
        time_dim: None,
        eval_realizations: 0,
    })
}

pub(crate) fn toy_beam_exact(x: f64, q: f64) -> f64 {
    q * (-x.powi(4) + 2.0 * x.powi(3) - x) / 24.0
}

fn heat_input(extra: Vec<InputDim>) -> Result<InputSpec> {
    let mut dims = vec![
        InputDim { name: "x".into(), marginal: Marginal::deterministic(0.0, 1.0)? },
        InputDim { name: "y".into(), marginal: Marginal::deterministic(0.0, 1.0)? },
        InputDim { name: "t".into(), marginal: Marginal::deterministic(0.0, 1.0)? },
    ];
    dims.extend(extra);
    InputSpec::new(dims)
}

/// `u_t − D (u_xx + u_yy) = rhs` with diffusivity read from the point.
fn heat_operator(dims: usize, diffusivity: crate::constraints::PointFn, rhs: crate::constraints::PointFn) -> Result<LinearOperator> {
    let d2 = Arc::clone(&diffusivity);
    LinearOperator::new(
        vec![
            OperatorTerm::constant(1.0, deriv_on(dims, 2, 1)),
            OperatorTerm::new(point_fn(move |p| -diffusivity(p)), deriv_on(dims, 0, 2)),
            OperatorTerm::new(point_fn(move |p| -d2(p)), deriv_on(dims, 1, 2)),
        ],
        rhs,
    )
}

fn dirichlet_ic(x: f64, y: f64) -> f64 {
    (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
}

fn neumann_ic(x: f64, y: f64) -> f64 {
    0.5 * ((4.0 * PI * x).sin() + (4.0 * PI * y).sin())
}

const SQUARE_FACETS: [(usize, f64); 4] = [(0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0)];

/// 2D heat equation, zero Dirichlet boundary, `D ~ U[0.001, 0.1]`.
pub fn problem_heat_dirichlet() -> Result<ProblemDef> {
    let input = heat_input(vec![InputDim { name: "D".into(), marginal: Marginal::uniform(0.001, 0.1)? }])?;
    let pde = heat_operator(4, point_fn(|p| p[3]), zero())?;
    Ok(ProblemDef {
        name: "heat-dirichlet",
        input,
        pde,
        boundary: facet_conditions(4, &SQUARE_FACETS, &[vec![]]),
        initial: Some(InitialCondition { facet: Facet { dim: 2, value: 0.0 }, value: point_fn(|p| dirichlet_ic(p[0], p[1])) }),
        reference: Reference::Analytic(point_fn(|p| {
            dirichlet_ic(p[0], p[1]) * (-8.0 * PI * PI * p[3] * p[2]).exp()
        })),
        defaults: Pc2Defaults { order: 10, q: 1.0, n_v: 1500, n_bc: 400, n_init: 400, n_data: 0 },
        spatial_dims: vec![0, 1],
        time_dim: Some(2),
        eval_realizations: 0,
    })
}

/// 2D heat equation, zero-flux boundary, finite-difference reference.
pub fn problem_heat_neumann(options: &ProblemOptions) -> Result<ProblemDef> {
    let input = heat_input(vec![InputDim { name: "D".into(), marginal: Marginal::uniform(0.001, 0.1)? }])?;
    let pde = heat_operator(4, point_fn(|p| p[3]), zero())?;
    let mut boundary = facet_conditions(4, &SQUARE_FACETS[..2], &[deriv_on(4, 0, 1)]);
    boundary.extend(facet_conditions(4, &SQUARE_FACETS[2..], &[deriv_on(4, 1, 1)]));
    let settings = options.heat_fd.unwrap_or_else(|| FdHeatSettings::desk(HeatBoundary::Neumann));
    let settings = FdHeatSettings { boundary: HeatBoundary::Neumann, ..settings };
    let reference = HeatReference::new(settings, neumann_ic, HeatParameters::Diffusivity { dim: 3 });
    Ok(ProblemDef {
        name: "heat-neumann",
        input,
        pde,
        boundary,
        initial: Some(InitialCondition { facet: Facet { dim: 2, value: 0.0 }, value: point_fn(|p| neumann_ic(p[0], p[1])) }),
        reference: Reference::Numerical(Arc::new(reference)),
        defaults: Pc2Defaults { order: 8, q: 1.0, n_v: 1000, n_bc: 400, n_init: 400, n_data: 0 },
        spatial_dims: vec![0, 1],
        time_dim: Some(2),
        eval_realizations: options.eval_realizations,
    })
}

/// Squared-exponential KL field of the beam stiffness (5 modes).
pub fn beam_stiffness_field() -> Result<KlField> {
    let kernel = Kernel::squared_exponential(5.0, 0.05 * BEAM_MEAN_STIFFNESS)?;
    kl_decompose(kernel, &Grid::line(0.0, BEAM_LENGTH, 201)?, BEAM_MEAN_STIFFNESS, Truncation::Modes(5))
}

/// `(EI u'')'' = q` with KL stiffness, expanded as
/// `EI u'''' + 2 EI' u''' + EI'' u'' = q`; inputs `x` and five germs.
pub fn problem_beam_kl(options: &ProblemOptions) -> Result<ProblemDef> {
    let field = Arc::new(beam_stiffness_field()?);
    let modes = field.n_modes();
    let mut dims = vec![InputDim { name: "x".into(), marginal: Marginal::deterministic(0.0, BEAM_LENGTH)? }];
    for i in 0..modes {
        dims.push(InputDim { name: format!("xi{}", i + 1), marginal: Marginal::gaussian(0.0, 1.0)? });
    }
    let input = InputSpec::new(dims)?;
    let m = modes + 1;
    let jet = |field: Arc<KlField>, k: usize, scale: f64| {
        point_fn(move |p| field_jet(&field, &p[1..], p[0]).map_or(f64::NAN, |j| scale * j[k]))
    };
    let pde = LinearOperator::new(
        vec![
            OperatorTerm::new(jet(Arc::clone(&field), 0, 1.0), deriv_on(m, 0, 4)),
            OperatorTerm::new(jet(Arc::clone(&field), 1, 2.0), deriv_on(m, 0, 3)),
            OperatorTerm::new(jet(Arc::clone(&field), 2, 1.0), deriv_on(m, 0, 2)),
        ],
        point_fn(|_| BEAM_LOAD),
    )?;
    let ends = [(0, 0.0), (0, BEAM_LENGTH)];
    let boundary = facet_conditions(m, &ends, &[vec![], deriv_on(m, 0, 2)]);
    let reference = BeamReference::new(Arc::clone(&field), BEAM_LENGTH, BEAM_LOAD, 1001);
    Ok(ProblemDef {
        name: "beam-kl",
        input,
        pde,
        boundary,
        initial: None,
        reference: Reference::Numerical(Arc::new(reference)),
        defaults: Pc2Defaults { order: 10, q: 0.7, n_v: 1000, n_bc: 400, n_init: 0, n_data: 0 },
        spatial_dims: vec![0],
        time_dim: None,
        eval_realizations: options.eval_realizations,
    })
}

/// Closed-form deflection of the simply supported beam at mean stiffness.
pub fn beam_mean_stiffness_deflection(x: f64) -> f64 {
    let l = BEAM_LENGTH;
    BEAM_LOAD * (x.powi(4) - 2.0 * l * x.powi(3) + l.powi(3) * x) / (24.0 * BEAM_MEAN_STIFFNESS)
}

/// Zero-mean squared-exponential source field on the unit square.
pub fn heat_source_field(modes: usize) -> Result<KlField> {
    let kernel = Kernel::squared_exponential(0.2, 0.05)?;
    kl_decompose(kernel, &Grid::rectangle((0.0, 1.0), (0.0, 1.0), 64, 64)?, 0.0, Truncation::Modes(modes))
}

/// Heat equation with `D = 0.01` and a KL source `f(x, y)`; Dirichlet
/// boundary; inputs `x, y, t` and the source germs.
pub fn problem_heat_kl_source(options: &ProblemOptions) -> Result<ProblemDef> {
    if options.heat_kl_modes == 0 {
        return Err(Error::InvalidInput("heat source needs at least one KL mode".into()));
    }
    let field = Arc::new(heat_source_field(options.heat_kl_modes)?);
    let modes = field.n_modes();
    let extra = (0..modes)
        .map(|i| Ok(InputDim { name: format!("xi{}", i + 1), marginal: Marginal::gaussian(0.0, 1.0)? }))
        .collect::<Result<Vec<_>>>()?;
    let input = heat_input(extra)?;
    let m = 3 + modes;
    let f = Arc::clone(&field);
    let rhs = point_fn(move |p| realize(&f, &p[3..], &[vec![p[0], p[1]]]).map_or(f64::NAN, |v| v[0]));
    let pde = heat_operator(m, point_fn(|_| 0.01), rhs)?;
    let settings = options.heat_fd.unwrap_or_else(|| FdHeatSettings::desk(HeatBoundary::Dirichlet));
    let settings = FdHeatSettings { boundary: HeatBoundary::Dirichlet, ..settings };
    let reference =
        HeatReference::new(settings, dirichlet_ic, HeatParameters::KlSource { diffusivity: 0.01, field, first_germ: 3 });
    Ok(ProblemDef {
        name: "heat-kl",
        input,
        pde,
        boundary: facet_conditions(m, &SQUARE_FACETS, &[vec![]]),
        initial: Some(InitialCondition { facet: Facet { dim: 2, value: 0.0 }, value: point_fn(|p| dirichlet_ic(p[0], p[1])) }),
        reference: Reference::Numerical(Arc::new(reference)),
        defaults: Pc2Defaults { order: 8, q: 0.6, n_v: 1000, n_bc: 400, n_init: 400, n_data: 1000 },
        spatial_dims: vec![0, 1],
        time_dim: Some(2),
        eval_realizations: options.eval_realizations,
    })
}
