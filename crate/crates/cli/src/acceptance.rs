//! Acceptance suite shared by `pc2 verify` and the `acceptance` test target.
//!
//! Each criterion runs independently and yields one [`CriterionResult`].

use std::fmt;
use std::path::Path;
use std::time::Instant;

use faer::Mat;
use pc2_core::basis::{BasisSpec, DesignMatrix, InputSpec, Marginal};
use pc2_core::benchmarks::{
    build_system, fd_heat, moment_fields, problem_heat_dirichlet, problem_heat_neumann, problem_toy_beam,
    run_experiment, ExperimentConfig, FdHeatSettings, HeatBoundary, IcMode, ProblemOptions,
};
use pc2_core::constraints::{ConstraintKind, ConstraintSet};
use pc2_core::randomfield::{kl_decompose, Grid, Kernel, Truncation};
use pc2_core::sampling::{candidate_matrix, d_optimal_select, rng_for, sample_random, subset_log_det, CandidateRows, Strategy};
use pc2_core::solvers::{fit, fit_kkt, fit_sulm, Method, Ridge, SolverConfig};
use pc2_core::Pc2Model;
use rand::seq::index::sample;
use rand::Rng;

use crate::commands::{cmd_train, cmd_uq};
use crate::config::RawConfig;

pub const TOY_KKT_MSE: f64 = 1e-10;
pub const TOY_SULM_MSE: f64 = 1e-7;
pub const EQUIV_COEFF_REL: f64 = 1e-8;
pub const EQUIV_MULT_REL: f64 = 1e-6;
pub const DOPT_PERCENTILE: f64 = 0.95;
pub const HEAT_MSE: f64 = 5e-3;
pub const HEAT_SPREAD: f64 = 10.0;
pub const KL_1D_MODES: usize = 5;
pub const KL_2D_MODES: usize = 28;
pub const KL_2D_SLACK: usize = 2;
pub const KL_FRACTION: f64 = 0.99;
pub const MOMENT_MEAN_GAP: f64 = 5e-3;
pub const MOMENT_STD_GAP: f64 = 1e-2;
pub const FD_MSE: f64 = 1e-6;
pub const FD_MEAN_DRIFT: f64 = 1e-6;
pub const HEAT_KL_MSE: f64 = 5e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: &'static str,
    pub title: &'static str,
    /// Non-gating results are reported but do not affect the exit status.
    pub gating: bool,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match (self.passed, self.gating) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "INFO",
        };
        write!(f, "{status} {:<3} {:<28} {:>7.1}s  {}", self.id, self.title, self.seconds, self.detail)
    }
}

fn timed(
    id: &'static str,
    title: &'static str,
    gating: bool,
    body: impl FnOnce() -> Result<(bool, String), String>,
) -> CriterionResult {
    let start = Instant::now();
    let (passed, detail) = body().unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult { id, title, gating, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn err<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Pure physics-informed toy beam fit with both constrained solvers.
pub fn toy_beam() -> CriterionResult {
    timed("1", "toy beam", true, || {
        let p = problem_toy_beam().map_err(err)?;
        let mut mse = Vec::new();
        for method in [Method::Kkt, Method::Sulm] {
            let cfg = ExperimentConfig::for_problem(&p, method);
            mse.push(run_experiment(&p, &cfg).map_err(err)?.report.mse);
        }
        let ok = check_toy_beam(mse[0], mse[1]);
        Ok((ok, format!("KKT mse {:.2e} (<= {TOY_KKT_MSE:e}), SULM mse {:.2e} (<= {TOY_SULM_MSE:e})", mse[0], mse[1])))
    })
}

pub fn check_toy_beam(kkt_mse: f64, sulm_mse: f64) -> bool {
    kkt_mse <= TOY_KKT_MSE && sulm_mse <= TOY_SULM_MSE
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// KKT and SULM on seeded random equality-constrained least-squares problems.
pub fn solver_equivalence() -> CriterionResult {
    timed("2", "solver equivalence", true, || {
        let (mut worst_beta, mut worst_mult) = (0.0f64, 0.0f64);
        let cfg = SolverConfig { ridge: Ridge::Fixed(0.0), ..SolverConfig::default() };
        for seed in 0..50u64 {
            let mut rng = rng_for(seed, 0);
            let card = rng.random_range(10..=40);
            let n_rows = card + rng.random_range(10..=60);
            let n_c = rng.random_range(1..card);
            let input = InputSpec::from_pairs([("x", Marginal::deterministic(-1.0, 1.0).map_err(err)?)]).map_err(err)?;
            let basis = BasisSpec::new(input, card - 1, 1.0).map_err(err)?;
            let psi = Mat::from_fn(n_rows, card, |_, _| rng.random_range(-1.0..1.0));
            let a = Mat::from_fn(n_c, card, |_, _| rng.random_range(-1.0..1.0));
            let y: Vec<f64> = (0..n_rows).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c: Vec<f64> = (0..n_c).map(|_| rng.random_range(-1.0..1.0)).collect();
            let design = DesignMatrix { values: psi, points: vec![vec![0.0]; n_rows] };
            let cons = ConstraintSet { matrix: a, rhs: c, kinds: vec![ConstraintKind::Pde; n_c], points: vec![vec![0.0]; n_c] };
            let k = fit_kkt(&basis, &design, &y, &cons, &cfg).map_err(err)?;
            let s = fit_sulm(&basis, &design, &y, &cons, &cfg).map_err(err)?;
            worst_beta = worst_beta.max(max_rel_diff(k.model.coefficients(), s.model.coefficients()));
            worst_mult = worst_mult.max(max_rel_diff(&k.multipliers, &s.multipliers));
        }
        let ok = worst_beta <= EQUIV_COEFF_REL && worst_mult <= EQUIV_MULT_REL;
        Ok((ok, format!("50 instances: max rel diff beta {worst_beta:.1e}, multipliers {worst_mult:.1e}")))
    })
}

/// Least-squares slope of `log t` against `log n`.
pub fn loglog_slope(n: &[f64], t: &[f64]) -> f64 {
    let x: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = t.iter().map(|v| v.max(1e-9).ln()).collect();
    let k = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Solver wall time against the number of constraints at fixed cardinality.
pub fn cost_scaling() -> CriterionResult {
    timed("3", "cost scaling", true, || {
        let p = problem_heat_dirichlet().map_err(err)?;
        let sizes = [500usize, 1000, 2000, 4000];
        let (mut t_kkt, mut t_sulm) = (Vec::new(), Vec::new());
        let mut card = 0;
        for &n_c in &sizes {
            let mut cfg = ExperimentConfig::for_problem(&p, Method::Kkt);
            cfg.order = 5;
            cfg.ic_mode = IcMode::Hard;
            cfg.n_bc = n_c / 5;
            cfg.n_init = n_c / 10;
            cfg.n_v = n_c - cfg.n_bc - cfg.n_init;
            let sys = build_system(&p, &cfg).map_err(err)?;
            card = sys.basis.cardinality();
            let cons = sys.constraints.as_ref();
            for (method, out) in [(Method::Kkt, &mut t_kkt), (Method::Sulm, &mut t_sulm)] {
                let solver = SolverConfig::with_method(method);
                let start = Instant::now();
                fit(&sys.basis, &sys.design, &sys.targets, cons, &solver).map_err(err)?;
                out.push(start.elapsed().as_secs_f64());
            }
        }
        let n: Vec<f64> = sizes.iter().map(|&v| v as f64).collect();
        let (sk, ss) = (loglog_slope(&n, &t_kkt), loglog_slope(&n, &t_sulm));
        let ok = ss < sk && t_sulm[3] < t_kkt[3];
        let fmt_t = |t: &[f64]| t.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join("/");
        Ok((
            ok,
            format!(
                "card {card}, n_c 500/1000/2000/4000: KKT {}s slope {sk:.2}, SULM {}s slope {ss:.2}",
                fmt_t(&t_kkt),
                fmt_t(&t_sulm)
            ),
        ))
    })
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for last in (k - 1)..n {
        for mut c in combinations(last, k - 1) {
            c.push(last);
            out.push(c);
        }
    }
    out
}

/// Selected log-det against random subsets, and exhaustive search at toy scale.
pub fn d_optimal_gain() -> CriterionResult {
    timed("4", "D-optimal gain", true, || {
        let mut notes = Vec::new();
        let mut ok = true;

        let input = InputSpec::from_pairs([
            ("a", Marginal::uniform(-1.0, 1.0).map_err(err)?),
            ("b", Marginal::uniform(-1.0, 1.0).map_err(err)?),
            ("c", Marginal::uniform(-1.0, 1.0).map_err(err)?),
        ])
        .map_err(err)?;
        let basis = BasisSpec::new(input, 3, 1.0).map_err(err)?;
        let pool = sample_random(basis.input(), 200, 4);
        let rows = candidate_matrix(&basis, &pool, None, CandidateRows::Basis).map_err(err)?;
        for n_v in [20usize, 200 / 3] {
            let chosen = d_optimal_select(rows.as_ref(), n_v).map_err(err)?;
            let ours = subset_log_det(rows.as_ref(), &chosen);
            let mut rng = rng_for(4, 1);
            let beaten = (0..1000)
                .filter(|_| subset_log_det(rows.as_ref(), &sample(&mut rng, 200, n_v).into_vec()) <= ours)
                .count();
            let pct = beaten as f64 / 1000.0;
            ok &= pct >= DOPT_PERCENTILE;
            notes.push(format!("card {} n_V {n_v}: above {:.1}% of random", basis.cardinality(), 100.0 * pct));
        }

        let toy = Mat::from_fn(4, 2, |i, j| [[1.0, 0.0], [0.0, 1.0], [0.9, 0.1], [0.1, 0.9]][i][j]);
        let mut pair = d_optimal_select(toy.as_ref(), 2).map_err(err)?;
        pair.sort_unstable();
        ok &= pair == [0, 1];

        let mut top_two = 0;
        let trials = 50u64;
        for seed in 0..trials {
            let mut rng = rng_for(seed, 5);
            let n = rng.random_range(4..=6);
            let card = rng.random_range(2..=4);
            let n_v = rng.random_range(1..=3);
            let m = Mat::from_fn(n, card, |_, _| rng.random_range(-1.0..1.0));
            let got = subset_log_det(m.as_ref(), &d_optimal_select(m.as_ref(), n_v).map_err(err)?);
            let mut all: Vec<f64> = combinations(n, n_v).iter().map(|c| subset_log_det(m.as_ref(), c)).collect();
            all.sort_by(|a, b| b.total_cmp(a));
            if got >= all[1] - 1e-12 {
                top_two += 1;
            }
        }
        ok &= top_two == trials;
        notes.push(format!("toy pair {pair:?}; exhaustive top-two {top_two}/{trials}"));
        Ok((ok, notes.join("; ")))
    })
}

fn heat_config(p: &pc2_core::benchmarks::ProblemDef, method: Method, strategy: Strategy) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_problem(p, method);
    cfg.strategy = strategy;
    cfg.ic_mode = IcMode::Hard;
    cfg.normalize_rows = true;
    cfg
}

/// Four solver/sampling variants on the heat equation with Dirichlet boundaries.
pub fn heat_dirichlet() -> CriterionResult {
    timed("5", "heat Dirichlet variants", true, || {
        let p = problem_heat_dirichlet().map_err(err)?;
        let mut parts = Vec::new();
        let mut mses = Vec::new();
        for (method, strategy, name) in [
            (Method::Kkt, Strategy::Random, "KKT"),
            (Method::Sulm, Strategy::Random, "SULM"),
            (Method::Kkt, Strategy::DOptimal, "KKT-D"),
            (Method::Sulm, Strategy::DOptimal, "SULM-D"),
        ] {
            let out = run_experiment(&p, &heat_config(&p, method, strategy)).map_err(err)?;
            mses.push(out.report.mse);
            parts.push(format!("{name} {:.2e}", out.report.mse));
        }
        let (lo, hi) = mses.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        let ok = hi <= HEAT_MSE && hi <= HEAT_SPREAD * lo;
        Ok((ok, format!("mse {} (<= {HEAT_MSE:e}, spread x{:.2})", parts.join(", "), hi / lo)))
    })
}

fn modes_for_fraction(kernel: Kernel, grid: &Grid) -> Result<usize, String> {
    kl_decompose(kernel, grid, 0.0, Truncation::VarianceFraction(KL_FRACTION)).map(|f| f.n_modes()).map_err(err)
}

/// Number of KL modes reaching 99% of the variance.
pub fn kl_variance() -> CriterionResult {
    timed("6", "KL variance capture", true, || {
        let m1 = modes_for_fraction(Kernel::squared_exponential(5.0, 1.0).map_err(err)?, &Grid::line(0.0, 10.0, 201).map_err(err)?)?;
        let m2 = modes_for_fraction(
            Kernel::squared_exponential(0.2, 1.0).map_err(err)?,
            &Grid::rectangle((0.0, 1.0), (0.0, 1.0), 64, 64).map_err(err)?,
        )?;
        let ok1 = m1 == KL_1D_MODES;
        let ok2 = m2.abs_diff(KL_2D_MODES) <= KL_2D_SLACK;
        Ok((
            ok1 && ok2,
            format!(
                "1D l=5 on [0,10]: {m1} modes (want {KL_1D_MODES}) {}; 2D l=0.2 64x64: {m2} modes (want {KL_2D_MODES}±{KL_2D_SLACK}) {}",
                if ok1 { "ok" } else { "MISMATCH" },
                if ok2 { "ok" } else { "MISMATCH" }
            ),
        ))
    })
}

/// Largest relative gaps (mean, std) between closed-form moments and a
/// seeded Monte Carlo estimate over the random inputs.
pub fn moment_gaps(model: &Pc2Model, det_points: &[Vec<f64>], samples: usize, seed: u64) -> Result<(f64, f64), String> {
    let input = model.basis().input();
    let det = input.deterministic_dims();
    let m = moment_fields(model, det_points).map_err(err)?;
    let draws = sample_random(input, samples, seed);
    let (mut gap_mean, mut gap_std) = (0.0f64, 0.0f64);
    for (k, dp) in det_points.iter().enumerate() {
        let (mut s, mut sq) = (0.0, 0.0);
        for chunk in draws.chunks(10_000) {
            let pts: Vec<Vec<f64>> = chunk
                .iter()
                .map(|d| {
                    let mut p = d.clone();
                    for (i, &dim) in det.iter().enumerate() {
                        p[dim] = dp[i];
                    }
                    p
                })
                .collect();
            for v in model.predict(&pts).map_err(err)? {
                s += v;
                sq += v * v;
            }
        }
        let n = samples as f64;
        let mc_mean = s / n;
        let mc_std = ((sq - n * mc_mean * mc_mean) / (n - 1.0)).max(0.0).sqrt();
        gap_mean = gap_mean.max((mc_mean - m.mean[k]).abs() / m.mean[k].abs());
        gap_std = gap_std.max((mc_std - m.std[k]).abs() / m.std[k]);
    }
    Ok((gap_mean, gap_std))
}

/// Closed-form moment fields against 1e5-sample Monte Carlo on the surrogate.
pub fn moments() -> CriterionResult {
    timed("7", "moment extraction", true, || {
        let toy = problem_toy_beam().map_err(err)?;
        let cfg = ExperimentConfig { n_eval: 1000, ..ExperimentConfig::for_problem(&toy, Method::Kkt) };
        let toy_model = run_experiment(&toy, &cfg).map_err(err)?.fit.model;
        let (tm, ts) = moment_gaps(&toy_model, &[vec![0.25], vec![0.5], vec![0.75]], 100_000, 71)?;

        let heat = problem_heat_dirichlet().map_err(err)?;
        let cfg = ExperimentConfig { n_eval: 1000, ..heat_config(&heat, Method::Kkt, Strategy::Random) };
        let heat_model = run_experiment(&heat, &cfg).map_err(err)?.fit.model;
        let pts = [vec![0.25, 0.25, 0.25], vec![0.75, 0.25, 0.5], vec![0.75, 0.75, 0.1]];
        let (hm, hs) = moment_gaps(&heat_model, &pts, 100_000, 72)?;

        let ok = tm.max(hm) <= MOMENT_MEAN_GAP && ts.max(hs) <= MOMENT_STD_GAP;
        Ok((
            ok,
            format!(
                "toy beam gap mean {:.3}% std {:.3}%; heat gap mean {:.3}% std {:.3}% (<= 0.5% / 1%)",
                100.0 * tm,
                100.0 * ts,
                100.0 * hm,
                100.0 * hs
            ),
        ))
    })
}

/// Finite-difference heat solver against the analytic Dirichlet solution, and
/// mean conservation under Neumann boundaries.
pub fn fd_reference() -> CriterionResult {
    timed("8", "FD reference fidelity", true, || {
        use std::f64::consts::PI;
        let d = 0.01;
        let settings = FdHeatSettings { nodes: 200, dt: 1e-4, t_end: 1.0, save_every: 5000, boundary: HeatBoundary::Dirichlet };
        let sol = fd_heat(&settings, d, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin(), None).map_err(err)?;
        let mut worst = 0.0f64;
        for t in [0.5, 1.0] {
            let k = sol.nearest_time(t);
            let snap = sol.snapshot(k);
            let decay = (-8.0 * PI * PI * d * sol.times()[k]).exp();
            let mut se = 0.0;
            for j in 0..200 {
                for i in 0..200 {
                    let (x, y) = (sol.coord(i), sol.coord(j));
                    se += (snap[(i, j)] - decay * (2.0 * PI * x).sin() * (2.0 * PI * y).sin()).powi(2);
                }
            }
            worst = worst.max(se / 40_000.0);
        }

        let neumann = FdHeatSettings { boundary: HeatBoundary::Neumann, ..settings };
        let sol = fd_heat(&neumann, d, |x, y| 0.5 * ((4.0 * PI * x).sin() + (4.0 * PI * y).sin()) + 0.2 * x, None)
            .map_err(err)?;
        let m0 = sol.spatial_mean(0);
        let drift = (0..sol.times().len()).map(|k| (sol.spatial_mean(k) - m0).abs()).fold(0.0, f64::max);
        let ok = worst <= FD_MSE && drift <= FD_MEAN_DRIFT;
        Ok((ok, format!("200x200 dt 1e-4: Dirichlet mse {worst:.2e} (<= 1e-6); Neumann mean drift {drift:.1e} (<= 1e-6)")))
    })
}

/// End-to-end heat run with a KL source: training, evaluation and field emission.
pub fn heat_kl_smoke(out_dir: &Path) -> CriterionResult {
    timed("S", "heat-KL smoke", true, || {
        let dir = out_dir.join("heat-kl");
        let text = format!(
            "problem = \"heat-kl\"\nmethod = \"SULM\"\nic_mode = \"hard\"\nnormalize_rows = true\nn_eval = 2000\ngrid_nx = 21\ngrid_ny = 21\nreference_samples = 8\noutput_dir = {:?}\n",
            dir.display().to_string()
        );
        let cfg = RawConfig::from_toml(&text).map_err(err)?.resolve().map_err(err)?;
        let out = cmd_train(&cfg).map_err(err)?;
        let uq = cmd_uq(&cfg, &dir.join("model.bin")).map_err(err)?;
        let finite = uq.errors.iter().all(|e| e.mean_error.is_finite() && e.std_error.is_finite());
        let files = ["mean_field.csv", "std_field.csv", "error_vs_reference.csv"]
            .iter()
            .all(|f| std::fs::metadata(dir.join(f)).map(|m| m.len() > 0).unwrap_or(false));
        let mse = out.report.mse;
        let ok = mse.is_finite() && mse <= HEAT_KL_MSE && finite && files;
        Ok((ok, format!("mse {mse:.2e} (<= {HEAT_KL_MSE:e}); fields written: {files}; finite errors: {finite}")))
    })
}

/// Reported only: SULM's large-`n_V` error against KKT's under Neumann boundaries.
pub fn neumann_large_nv() -> CriterionResult {
    timed("N", "Neumann SULM vs KKT", false, || {
        let p = problem_heat_neumann(&ProblemOptions::default()).map_err(err)?;
        let mut mse = Vec::new();
        for method in [Method::Kkt, Method::Sulm] {
            let mut cfg = ExperimentConfig::for_problem(&p, method);
            cfg.n_v = 2000;
            cfg.n_eval = 5000;
            mse.push(run_experiment(&p, &cfg).map_err(err)?.report.mse);
        }
        Ok((mse[1] <= mse[0], format!("n_V 2000: KKT mse {:.2e}, SULM mse {:.2e} (non-gating)", mse[0], mse[1])))
    })
}

/// Criterion identifiers in run order.
pub const CRITERIA: [&str; 10] = ["1", "2", "3", "4", "5", "6", "7", "8", "S", "N"];

/// Runs the criteria whose ids appear in `only` (all when empty), reporting
/// each result through `report` as it finishes.
pub fn run_all(out_dir: &Path, only: &[String], mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    type Run<'a> = Box<dyn FnOnce() -> CriterionResult + 'a>;
    let runs: Vec<(&str, Run<'_>)> = vec![
        ("1", Box::new(toy_beam)),
        ("2", Box::new(solver_equivalence)),
        ("3", Box::new(cost_scaling)),
        ("4", Box::new(d_optimal_gain)),
        ("5", Box::new(heat_dirichlet)),
        ("6", Box::new(kl_variance)),
        ("7", Box::new(moments)),
        ("8", Box::new(fd_reference)),
        ("S", Box::new(|| heat_kl_smoke(out_dir))),
        ("N", Box::new(neumann_large_nv)),
    ];
    runs.into_iter()
        .filter(|(id, _)| only.is_empty() || only.iter().any(|o| o.eq_ignore_ascii_case(id)))
        .map(|(_, f)| {
            let r = f();
            report(&r);
            r
        })
        .collect()
}

pub fn gating_failures(results: &[CriterionResult]) -> usize {
    results.iter().filter(|r| r.gating && !r.passed).count()
}
