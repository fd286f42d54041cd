//! Random point generation and D-optimal selection of virtual points.

use faer::{Mat, MatRef, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::basis::{rows_to_mat, BasisSpec, InputSpec, Marginal};
use crate::constraints::{apply_operator_row, LinearOperator};
use crate::error::{Error, Result};

/// How virtual points are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Random,
    DOptimal,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "random" => Ok(Strategy::Random),
            "doptimal" | "d" => Ok(Strategy::DOptimal),
            other => Err(Error::InvalidInput(format!("unknown sampling strategy '{other}'"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Random => "random",
            Strategy::DOptimal => "d-optimal",
        })
    }
}

/// Rows that make up the candidate matrix for D-optimal selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateRows {
    /// The PDE operator applied to the basis (falls back to basis rows when
    /// the problem has no PDE operator).
    #[default]
    Operator,
    Basis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePlan {
    pub n_v: usize,
    pub n_bc: usize,
    /// Initial-condition points enforced as hard constraints.
    pub n_ic: usize,
    /// Initial-condition points used as soft training data.
    pub n_init: usize,
    pub strategy: Strategy,
    pub oversample_k: usize,
    pub candidate_rows: CandidateRows,
    pub seed: u64,
}

impl SamplePlan {
    pub fn random(n_v: usize, n_bc: usize, seed: u64) -> Self {
        Self {
            n_v,
            n_bc,
            n_ic: 0,
            n_init: 0,
            strategy: Strategy::Random,
            oversample_k: 3,
            candidate_rows: CandidateRows::Operator,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.oversample_k == 0 {
            return Err(Error::InvalidInput("oversample_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// A face of the input box: dimension `dim` held at `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    pub dim: usize,
    pub value: f64,
}

/// Geometry a plan is drawn on.
#[derive(Clone, Copy)]
pub struct PlanDomain<'a> {
    pub input: &'a InputSpec,
    /// One entry per boundary condition; `n_bc` is split evenly across them.
    pub boundary: &'a [Facet],
    pub initial: Option<Facet>,
    pub pde: Option<&'a LinearOperator>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlannedPoints {
    pub virtual_points: Vec<Vec<f64>>,
    /// Points per boundary condition, in the order of [`PlanDomain::boundary`].
    pub boundary: Vec<Vec<Vec<f64>>>,
    pub initial_hard: Vec<Vec<f64>>,
    pub initial_data: Vec<Vec<f64>>,
}

impl PlannedPoints {
    pub fn boundary_count(&self) -> usize {
        self.boundary.iter().map(Vec::len).sum()
    }
}

/// Seeded generator; `stream` separates independent point sets drawn from one seed.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw(marginal: &Marginal, rng: &mut impl Rng) -> f64 {
    match *marginal {
        Marginal::Deterministic { lo, hi } | Marginal::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        Marginal::Gaussian { mean, std } => {
            let z: f64 = rng.sample(StandardNormal);
            mean + std * z
        }
    }
}

/// Draws `n` points from the product of the marginals.
pub fn sample_with(spec: &InputSpec, n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| spec.dims().iter().map(|d| draw(&d.marginal, rng)).collect()).collect()
}

/// `n` i.i.d. points: uniform on intervals, Gaussian for Gaussian marginals.
pub fn sample_random(spec: &InputSpec, n: usize, seed: u64) -> Vec<Vec<f64>> {
    sample_with(spec, n, &mut rng_for(seed, 0))
}

/// Random points with one coordinate pinned to a facet.
pub fn sample_on_facet(spec: &InputSpec, facet: Facet, n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut pts = sample_with(spec, n, rng);
    for p in &mut pts {
        p[facet.dim] = facet.value;
    }
    pts
}

/// Orders candidate rows by D-optimality and returns the first `n_v`.
///
/// The candidate matrix is reduced to its right singular vectors of
/// `candidatesᵀ`, scaled by the singular values and truncated at the
/// numerical rank, and QR with column pivoting ranks these candidate-indexed
/// columns. Once the rank is exhausted, each further pick is the candidate
/// with the largest leverage under the information matrix of the rows chosen
/// so far (the greedy determinant gain), ties broken by index.
pub fn d_optimal_select(candidates: MatRef<'_, f64>, n_v: usize) -> Result<Vec<usize>> {
    let n = candidates.nrows();
    if n_v > n {
        return Err(Error::InvalidInput(format!("cannot select {n_v} points from {n} candidates")));
    }
    if n_v == 0 {
        return Ok(Vec::new());
    }
    if candidates.ncols() == 0 {
        return Err(Error::InvalidInput("candidate matrix has no columns".into()));
    }
    let svd = candidates
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("candidate SVD failed: {e:?}")))?;
    let s = svd.S().column_vector();
    let smax = if s.nrows() > 0 { s[0] } else { 0.0 };
    if !(smax > 0.0) {
        return Err(Error::InvalidInput("candidate matrix is zero".into()));
    }
    let tol = smax * f64::EPSILON * n.max(candidates.ncols()) as f64;
    let rank = (0..s.nrows()).filter(|&i| s[i] > tol).count();
    // columns index candidates
    let u = svd.U();
    let vt = Mat::from_fn(rank, n, |i, c| s[i] * u[(c, i)]);

    let qr = vt.col_piv_qr();
    let (fwd, _) = qr.P().arrays();
    let mut order: Vec<usize> = fwd.iter().take(rank.min(n_v)).copied().collect();
    if order.len() < n_v {
        greedy_fill(vt.as_ref(), &mut order, n_v);
    }
    Ok(order)
}

/// Extends `order` to `n_v` picks, each maximizing `vᵀ G⁻¹ v` where `G` is the
/// information matrix of the columns already chosen. Scores and `G⁻¹` are
/// updated by Sherman-Morrison after every pick.
fn greedy_fill(vt: MatRef<'_, f64>, order: &mut Vec<usize>, n_v: usize) {
    let (r, n) = (vt.nrows(), vt.ncols());
    let mut taken = vec![false; n];
    for &c in order.iter() {
        taken[c] = true;
    }
    let sel = Mat::from_fn(r, order.len(), |i, k| vt[(i, order[k])]);
    let g = &sel * sel.transpose();
    let mut ginv = match g.llt(Side::Lower) {
        Ok(llt) => crate::linalg::llt_solve(&llt, Mat::<f64>::identity(r, r).as_ref()),
        Err(_) => Mat::identity(r, r),
    };
    let gv = &ginv * vt;
    let mut score: Vec<f64> = (0..n).map(|c| (0..r).map(|i| vt[(i, c)] * gv[(i, c)]).sum()).collect();

    while order.len() < n_v {
        let mut best = usize::MAX;
        for c in 0..n {
            if !taken[c] && (best == usize::MAX || score[c] > score[best]) {
                best = c;
            }
        }
        order.push(best);
        taken[best] = true;
        if order.len() == n_v {
            break;
        }
        let w = &ginv * vt.subcols(best, 1);
        let denom = 1.0 + score[best];
        let proj = vt.transpose() * &w;
        for c in 0..n {
            score[c] -= proj[(c, 0)] * proj[(c, 0)] / denom;
        }
        ginv -= (&w * w.transpose()) * faer::Scale(1.0 / denom);
    }
}

/// `log det` of the Gram of the selected rows, using the smaller of
/// `SᵀS` and `SSᵀ`. `-∞` when it is singular.
pub fn subset_log_det(rows: MatRef<'_, f64>, selected: &[usize]) -> f64 {
    let sub = Mat::from_fn(selected.len(), rows.ncols(), |i, j| rows[(selected[i], j)]);
    let g = if sub.nrows() >= sub.ncols() { sub.transpose() * &sub } else { &sub * sub.transpose() };
    match g.llt(Side::Lower) {
        Ok(llt) => {
            let l = llt.L();
            (0..l.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum()
        }
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Candidate matrix rows at `points`.
pub fn candidate_matrix(
    basis: &BasisSpec,
    points: &[Vec<f64>],
    op: Option<&LinearOperator>,
    rows: CandidateRows,
) -> Result<Mat<f64>> {
    let built: Vec<Vec<f64>> = match (rows, op) {
        (CandidateRows::Operator, Some(op)) => points
            .par_iter()
            .map(|p| apply_operator_row(op, basis, p).map(|(r, _)| r))
            .collect::<Result<_>>()?,
        _ => {
            let zero = vec![0; basis.dim()];
            points.par_iter().map(|p| basis.row(p, &zero)).collect::<Result<_>>()?
        }
    };
    Ok(rows_to_mat(&built, basis.cardinality()))
}

/// Draws virtual, boundary and initial points for one run.
pub fn plan_points(domain: &PlanDomain<'_>, plan: &SamplePlan, basis: &BasisSpec) -> Result<PlannedPoints> {
    plan.validate()?;
    if (plan.n_ic > 0 || plan.n_init > 0) && domain.initial.is_none() {
        return Err(Error::InvalidInput("initial-condition points requested for a steady problem".into()));
    }
    if plan.n_bc > 0 && domain.boundary.is_empty() {
        return Err(Error::InvalidInput("boundary points requested but the problem has no boundary".into()));
    }
    let input = domain.input;
    let virtual_points = match plan.strategy {
        Strategy::Random => sample_with(input, plan.n_v, &mut rng_for(plan.seed, 0)),
        Strategy::DOptimal => {
            let pool = sample_with(input, plan.oversample_k * plan.n_v, &mut rng_for(plan.seed, 0));
            let cand = candidate_matrix(basis, &pool, domain.pde, plan.candidate_rows)?;
            d_optimal_select(cand.as_ref(), plan.n_v)?.into_iter().map(|i| pool[i].clone()).collect()
        }
    };

    let mut brng = rng_for(plan.seed, 1);
    let sets = domain.boundary.len();
    let boundary = domain
        .boundary
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let n = plan.n_bc / sets + usize::from(i < plan.n_bc % sets);
            sample_on_facet(input, f, n, &mut brng)
        })
        .collect();

    let (initial_hard, initial_data) = match domain.initial {
        Some(f) => (
            sample_on_facet(input, f, plan.n_ic, &mut rng_for(plan.seed, 2)),
            sample_on_facet(input, f, plan.n_init, &mut rng_for(plan.seed, 3)),
        ),
        None => (Vec::new(), Vec::new()),
    };
    Ok(PlannedPoints { virtual_points, boundary, initial_hard, initial_data })
}
