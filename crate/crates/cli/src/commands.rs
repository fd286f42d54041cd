//! `train`, `sweep` and `uq`.

use std::fs;
use std::path::Path;
use std::time::Instant;

use pc2_core::benchmarks::{evaluate, fit_problem_adaptive, moment_fields, run_experiment, MetricReport, ProblemDef};
use pc2_core::io::{load_model, save_model};
use pc2_core::sampling::{rng_for, sample_with};
use pc2_core::solvers::FitResult;
use pc2_core::Pc2Model;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, Variant};
use crate::error::{CliError, CliResult};

pub const VERSION: &str = concat!("pc2 ", env!("CARGO_PKG_VERSION"));

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(CliError::Csv)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    Ok(())
}

/// Effective configuration and version string, written by every command.
fn write_provenance(cfg: &RunConfig, dir: &Path) -> CliResult<()> {
    write_text(&dir.join("effective_config.toml"), &cfg.to_toml())?;
    write_text(&dir.join("version.txt"), &format!("{VERSION}\n"))
}

fn timing(cfg: &RunConfig, seconds: f64) -> f64 {
    if cfg.record_timing {
        seconds
    } else {
        0.0
    }
}

/// Outcome of a single training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub fit: FitResult,
    pub report: MetricReport,
    pub fit_seconds: f64,
    pub total_seconds: f64,
}

/// Trains one variant at one `n_V` and evaluates it on the problem's test design.
pub fn train_once(cfg: &RunConfig, problem: &ProblemDef, variant: Variant, n_v: usize, seed: u64) -> CliResult<TrainOutcome> {
    let exp = cfg.experiment(problem, variant, n_v, seed);
    if exp.solver.adaptivity.is_some() {
        let start = Instant::now();
        let fit = fit_problem_adaptive(problem, &exp).map_err(CliError::Fit)?;
        let fit_seconds = start.elapsed().as_secs_f64();
        let report = evaluate(problem, &fit.model, exp.n_eval, seed).map_err(CliError::Fit)?;
        Ok(TrainOutcome { fit, report, fit_seconds, total_seconds: start.elapsed().as_secs_f64() })
    } else {
        let out = run_experiment(problem, &exp).map_err(CliError::Fit)?;
        Ok(TrainOutcome {
            fit: out.fit,
            report: out.report,
            fit_seconds: out.fit_seconds,
            total_seconds: out.total_seconds,
        })
    }
}

#[derive(Serialize)]
struct DiagnosticsRow<'a> {
    stage: &'a str,
    wall_time_s: f64,
    data_mse: f64,
    pde_mse: f64,
    bc_mse: f64,
    chosen_p: usize,
}

#[derive(Serialize)]
struct MetricsRow {
    mse: f64,
    mae: f64,
    max_ae: f64,
    mean_rae: f64,
    max_rae: f64,
    rae_excluded: usize,
    interior_mse: Option<f64>,
    boundary_mse: Option<f64>,
}

pub fn cmd_train(cfg: &RunConfig) -> CliResult<TrainOutcome> {
    if cfg.n_v.len() != 1 {
        return Err(CliError::config("n_v", "train takes a single value; use `sweep` for lists"));
    }
    let problem = cfg.problem_def()?;
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let variant = Variant { method: cfg.method, strategy: cfg.strategy };
    let out = train_once(cfg, &problem, variant, cfg.n_v[0], cfg.seed)?;

    let d = &out.fit.diagnostics;
    save_model(dir.join("model.bin"), &out.fit.model, &stripped(cfg, d))?;
    let rows: Vec<DiagnosticsRow> = d
        .timings
        .iter()
        .map(|t| DiagnosticsRow {
            stage: &t.stage,
            wall_time_s: timing(cfg, t.seconds),
            data_mse: d.data_mse,
            pde_mse: d.pde_residual_mse,
            bc_mse: d.bc_residual_mse,
            chosen_p: d.chosen_order,
        })
        .collect();
    write_csv(&dir.join("diagnostics.csv"), &rows, &["stage", "wall_time_s", "data_mse", "pde_mse", "bc_mse", "chosen_p"])?;
    let r = &out.report;
    write_csv(
        &dir.join("metrics.csv"),
        &[MetricsRow {
            mse: r.mse,
            mae: r.mae,
            max_ae: r.max_ae,
            mean_rae: r.mean_rae,
            max_rae: r.max_rae,
            rae_excluded: r.rae_excluded,
            interior_mse: r.interior.as_ref().map(|e| e.mse),
            boundary_mse: r.boundary.as_ref().map(|e| e.mse),
        }],
        &["mse", "mae", "max_ae", "mean_rae", "max_rae", "rae_excluded", "interior_mse", "boundary_mse"],
    )?;
    write_provenance(cfg, dir)?;
    Ok(out)
}

/// Diagnostics as stored in the model file: timings zeroed unless recorded.
fn stripped(cfg: &RunConfig, d: &pc2_core::Diagnostics) -> pc2_core::Diagnostics {
    let mut d = d.clone();
    for t in &mut d.timings {
        t.seconds = timing(cfg, t.seconds);
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    #[serde(rename = "n_V")]
    pub n_v: usize,
    pub repeat: usize,
    pub seed: u64,
    pub mse: f64,
    pub wall_time_s: f64,
    pub total_time_s: f64,
}

#[derive(Serialize)]
struct SummaryRow {
    method: String,
    #[serde(rename = "n_V")]
    n_v: usize,
    mse_mean: f64,
    mse_std: f64,
    wall_time_mean_s: f64,
}

/// Trains every variant × `n_V` × repeat cell. Cells run in parallel on the
/// rayon pool; rows come back in (variant, `n_V`, repeat) order.
pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<Vec<SweepRow>> {
    let problem = cfg.problem_def()?;
    ensure_dir(&cfg.output_dir)?;
    let mut cells = Vec::new();
    for (vi, &variant) in cfg.variants.iter().enumerate() {
        for &n_v in &cfg.n_v {
            for repeat in 0..cfg.repeats {
                cells.push((vi, variant, n_v, repeat));
            }
        }
    }
    let mut rows: Vec<(usize, SweepRow)> = cells
        .par_iter()
        .map(|&(vi, variant, n_v, repeat)| {
            let seed = cfg.seed.wrapping_add(repeat as u64);
            let out = train_once(cfg, &problem, variant, n_v, seed)?;
            Ok((
                vi,
                SweepRow {
                    method: variant.to_string(),
                    n_v,
                    repeat,
                    seed,
                    mse: out.report.mse,
                    wall_time_s: timing(cfg, out.fit_seconds),
                    total_time_s: timing(cfg, out.total_seconds),
                },
            ))
        })
        .collect::<CliResult<_>>()?;
    rows.sort_by_key(|(k, r)| (*k, r.n_v, r.repeat));
    let rows: Vec<SweepRow> = rows.into_iter().map(|(_, r)| r).collect();

    let dir = &cfg.output_dir;
    write_csv(
        &dir.join("sweep.csv"),
        &rows,
        &["method", "n_V", "repeat", "seed", "mse", "wall_time_s", "total_time_s"],
    )?;
    let mut summary = Vec::new();
    for chunk in rows.chunk_by(|a, b| a.method == b.method && a.n_v == b.n_v) {
        let n = chunk.len() as f64;
        let mean = chunk.iter().map(|r| r.mse).sum::<f64>() / n;
        let var = if chunk.len() > 1 {
            chunk.iter().map(|r| (r.mse - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        summary.push(SummaryRow {
            method: chunk[0].method.clone(),
            n_v: chunk[0].n_v,
            mse_mean: mean,
            mse_std: var.sqrt(),
            wall_time_mean_s: chunk.iter().map(|r| r.wall_time_s).sum::<f64>() / n,
        });
    }
    write_csv(&dir.join("sweep_summary.csv"), &summary, &["method", "n_V", "mse_mean", "mse_std", "wall_time_mean_s"])?;
    write_provenance(cfg, dir)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub x: f64,
    pub y: f64,
    pub mean_reference: f64,
    pub mean_error: f64,
    pub std_reference: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone)]
pub struct UqOutcome {
    pub mean: Vec<FieldRow>,
    pub std: Vec<FieldRow>,
    pub errors: Vec<ErrorRow>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Deterministic-input points of the field grid and their `(x, y)` labels.
/// The first spatial input spans `grid_nx` values, the second `grid_ny`, and
/// the time input is fixed at `uq_time`.
fn field_grid(cfg: &RunConfig, problem: &ProblemDef, model: &Pc2Model) -> CliResult<(Vec<Vec<f64>>, Vec<(f64, f64)>)> {
    let input = model.basis().input();
    let det = input.deterministic_dims();
    let axis = |d: usize, n: usize| -> CliResult<Vec<f64>> {
        let (lo, hi) = input
            .marginal(d)
            .bounds()
            .ok_or_else(|| CliError::config("problem", "spatial input without bounds"))?;
        Ok(linspace(lo, hi, n))
    };
    let spatial: Vec<usize> = problem.spatial_dims.iter().copied().filter(|d| det.contains(d)).collect();
    let xs = match spatial.first() {
        Some(&d) => axis(d, cfg.grid_nx)?,
        None => vec![0.0],
    };
    let ys = match spatial.get(1) {
        Some(&d) => axis(d, cfg.grid_ny)?,
        None => vec![0.0],
    };
    let mut points = Vec::with_capacity(xs.len() * ys.len());
    let mut labels = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            let p = det
                .iter()
                .map(|&d| {
                    if Some(&d) == spatial.first() {
                        x
                    } else if Some(&d) == spatial.get(1) {
                        y
                    } else if Some(d) == problem.time_dim {
                        cfg.uq_time
                    } else {
                        input.marginal(d).bounds().map_or(0.0, |(lo, hi)| 0.5 * (lo + hi))
                    }
                })
                .collect();
            points.push(p);
            labels.push((x, y));
        }
    }
    Ok((points, labels))
}

/// Monte Carlo mean and standard deviation of the reference solution at the
/// deterministic points, over `reference_samples` seeded random inputs.
fn reference_moments(cfg: &RunConfig, problem: &ProblemDef, det_points: &[Vec<f64>]) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let input = &problem.input;
    let det = input.deterministic_dims();
    let n = cfg.reference_samples;
    let mut rng = rng_for(cfg.seed, 21);
    let draws = sample_with(input, n, &mut rng);
    let mut sum = vec![0.0; det_points.len()];
    let mut sq = vec![0.0; det_points.len()];
    for draw in &draws {
        let pts: Vec<Vec<f64>> = det_points
            .iter()
            .map(|dp| {
                let mut p = draw.clone();
                for (k, &d) in det.iter().enumerate() {
                    p[d] = dp[k];
                }
                p
            })
            .collect();
        let v = problem.reference.evaluate(&pts)?;
        for (i, y) in v.into_iter().enumerate() {
            sum[i] += y;
            sq[i] += y * y;
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let std = sq
        .iter()
        .zip(&mean)
        .map(|(s, m)| if n > 1 { ((s - nf * m * m) / (nf - 1.0)).max(0.0).sqrt() } else { 0.0 })
        .collect();
    Ok((mean, std))
}

/// Mean and standard deviation fields of a stored model, and their error
/// against a Monte Carlo estimate over the problem's reference solution.
pub fn cmd_uq(cfg: &RunConfig, model_path: &Path) -> CliResult<UqOutcome> {
    let problem = cfg.problem_def()?;
    let (model, _) = load_model(model_path).map_err(|e| match e {
        pc2_core::Error::Io(io) => CliError::io(format!("reading model {}", model_path.display()), io),
        other => CliError::Core(other),
    })?;
    let names = |s: &pc2_core::InputSpec| s.dims().iter().map(|d| d.name.clone()).collect::<Vec<_>>();
    if names(model.basis().input()) != names(&problem.input) {
        return Err(CliError::config(
            "problem",
            format!("model inputs {:?} do not match problem '{}'", names(model.basis().input()), problem.name),
        ));
    }
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let (points, labels) = field_grid(cfg, &problem, &model)?;
    let m = moment_fields(&model, &points)?;
    let field = |v: &[f64]| -> Vec<FieldRow> {
        labels.iter().zip(v).map(|(&(x, y), &value)| FieldRow { x, y, value }).collect()
    };
    let mean = field(&m.mean);
    let std = field(&m.std);
    write_csv(&dir.join("mean_field.csv"), &mean, &["x", "y", "value"])?;
    write_csv(&dir.join("std_field.csv"), &std, &["x", "y", "value"])?;

    let (ref_mean, ref_std) = reference_moments(cfg, &problem, &points)?;
    let errors: Vec<ErrorRow> = labels
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| ErrorRow {
            x,
            y,
            mean_reference: ref_mean[i],
            mean_error: m.mean[i] - ref_mean[i],
            std_reference: ref_std[i],
            std_error: m.std[i] - ref_std[i],
        })
        .collect();
    write_csv(
        &dir.join("error_vs_reference.csv"),
        &errors,
        &["x", "y", "mean_reference", "mean_error", "std_reference", "std_error"],
    )?;
    write_provenance(cfg, dir)?;
    Ok(UqOutcome { mean, std, errors })
}
