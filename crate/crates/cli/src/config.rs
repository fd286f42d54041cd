//! Run configuration: a flat TOML file, versioned by `format_version`.
//!
//! Every key is optional except `problem`; absent keys take the problem's
//! defaults. The resolved configuration is written next to every run's
//! outputs as `effective_config.toml` and loads back to the same run.
//!
//! | key | meaning |
//! |-----|---------|
//! | `format_version` | must be 1 |
//! | `problem` | `toy-beam`, `heat-dirichlet`, `heat-neumann`, `beam-kl`, `heat-kl` |
//! | `method` | `KKT`, `SULM` or `OLS` |
//! | `strategy` | `random` or `d-optimal` |
//! | `methods` | sweep variants such as `["KKT", "SULM-D"]` (`-D` = D-optimal) |
//! | `order`, `q` | total order and hyperbolic norm |
//! | `n_v` | virtual points, an integer or a list (sweeps) |
//! | `n_bc`, `n_init`, `n_data` | boundary, initial-condition and reference data points |
//! | `ic_mode` | `soft` (initial condition as data) or `hard` (as constraints) |
//! | `normalize_rows` | scale constraint rows to unit norm |
//! | `oversample_k`, `candidate_rows` | D-optimal pool factor and rows (`operator`/`basis`) |
//! | `ridge`, `rank_tol` | `"auto"` or a number; least-squares rank cutoff |
//! | `adaptive`, `min_order`, `max_order`, `eps_data`, `eps_pde`, `eps_bc` | order-adaptive loop |
//! | `seed`, `repeats`, `n_eval` | RNG seed, sweep repeats, test points |
//! | `output_dir`, `record_timing` | output location; `false` writes zero wall times |
//! | `heat_kl_modes`, `eval_realizations` | problem options |
//! | `grid_nx`, `grid_ny`, `uq_time`, `reference_samples` | `uq` field grid and reference Monte Carlo |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pc2_core::benchmarks::{problem_by_name, ExperimentConfig, IcMode, ProblemDef, ProblemOptions, PROBLEM_NAMES};
use pc2_core::sampling::{CandidateRows, Strategy};
use pc2_core::solvers::{Adaptivity, Method, Ridge};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RidgeValue {
    Value(f64),
    Keyword(String),
}

/// The file as written; all keys optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format_version: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_v: Option<OneOrMany>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_bc: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_init: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_data: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ic_mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalize_rows: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oversample_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate_rows: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge: Option<RidgeValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_data: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_pde: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_bc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_eval: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_timing: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heat_kl_modes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_nx: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_ny: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uq_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_samples: Option<usize>,
}

/// Solver method paired with a sampling strategy, e.g. `SULM-D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variant {
    pub method: Method,
    pub strategy: Strategy,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.strategy {
            Strategy::Random => write!(f, "{}", self.method),
            Strategy::DOptimal => write!(f, "{}-D", self.method),
        }
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let upper = s.trim().to_ascii_uppercase();
        let (name, strategy) = match upper.strip_suffix("-D") {
            Some(m) => (m, Strategy::DOptimal),
            None => (upper.as_str(), Strategy::Random),
        };
        let method = name.parse::<Method>().map_err(|e| e.to_string())?;
        Ok(Variant { method, strategy })
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub method: Method,
    pub strategy: Strategy,
    pub variants: Vec<Variant>,
    pub order: usize,
    pub q: f64,
    pub n_v: Vec<usize>,
    pub n_bc: usize,
    pub n_init: usize,
    pub n_data: usize,
    pub ic_mode: IcMode,
    pub normalize_rows: bool,
    pub oversample_k: usize,
    pub candidate_rows: CandidateRows,
    pub ridge: Ridge,
    pub rank_tol: f64,
    pub adaptivity: Option<Adaptivity>,
    pub seed: u64,
    pub repeats: usize,
    pub n_eval: usize,
    pub output_dir: PathBuf,
    pub record_timing: bool,
    pub problem_options: ProblemOptions,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub uq_time: f64,
    pub reference_samples: usize,
}

fn parse_field<T: FromStr>(field: &str, value: &str) -> CliResult<T>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| CliError::config(field, e.to_string()))
}

fn candidate_rows_from(s: &str) -> CliResult<CandidateRows> {
    match s.to_ascii_lowercase().as_str() {
        "operator" => Ok(CandidateRows::Operator),
        "basis" => Ok(CandidateRows::Basis),
        other => Err(CliError::config("candidate_rows", format!("expected `operator` or `basis`, got '{other}'"))),
    }
}

fn candidate_rows_name(c: CandidateRows) -> &'static str {
    match c {
        CandidateRows::Operator => "operator",
        CandidateRows::Basis => "basis",
    }
}

impl RawConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading config {}", path.display()), e))?;
        Self::from_toml(&text)
    }

    /// Applies defaults and checks every value.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        if let Some(v) = self.format_version {
            if v != FORMAT_VERSION {
                return Err(CliError::config("format_version", format!("unsupported version {v}, expected 1")));
            }
        }
        let problem = self.problem.clone().ok_or_else(|| CliError::config("problem", "missing"))?;
        if !PROBLEM_NAMES.contains(&problem.as_str()) {
            return Err(CliError::config(
                "problem",
                format!("unknown problem '{problem}', expected one of {}", PROBLEM_NAMES.join(", ")),
            ));
        }
        let defaults = ProblemOptions::default();
        let problem_options = ProblemOptions {
            heat_kl_modes: self.heat_kl_modes.unwrap_or(defaults.heat_kl_modes),
            heat_fd: None,
            eval_realizations: self.eval_realizations.unwrap_or(defaults.eval_realizations),
        };
        if problem_options.heat_kl_modes == 0 {
            return Err(CliError::config("heat_kl_modes", "must be at least 1"));
        }
        if problem_options.eval_realizations == 0 {
            return Err(CliError::config("eval_realizations", "must be at least 1"));
        }
        let def = problem_by_name(&problem, &problem_options)
            .map_err(|e| CliError::config("problem", e.to_string()))?
            .defaults;

        let method = match &self.method {
            Some(m) => parse_field::<Method>("method", m)?,
            None => Method::Kkt,
        };
        let strategy = match &self.strategy {
            Some(s) => parse_field::<Strategy>("strategy", s)?,
            None => Strategy::Random,
        };
        let variants = match &self.methods {
            Some(list) if list.is_empty() => return Err(CliError::config("methods", "list is empty")),
            Some(list) => list.iter().map(|s| parse_field::<Variant>("methods", s)).collect::<CliResult<Vec<_>>>()?,
            None => vec![Variant { method, strategy }],
        };

        let q = self.q.unwrap_or(def.q);
        if !(q > 0.0 && q <= 1.0) {
            return Err(CliError::config("q", format!("must lie in (0, 1], got {q}")));
        }
        let n_v = match &self.n_v {
            None => vec![def.n_v],
            Some(OneOrMany::One(n)) => vec![*n],
            Some(OneOrMany::Many(v)) => v.clone(),
        };
        if n_v.is_empty() || n_v.contains(&0) {
            return Err(CliError::config("n_v", "needs at least one positive value"));
        }
        let ic_mode = match &self.ic_mode {
            Some(s) => parse_field::<IcMode>("ic_mode", s)?,
            None => IcMode::Soft,
        };
        let oversample_k = self.oversample_k.unwrap_or(3);
        if oversample_k == 0 {
            return Err(CliError::config("oversample_k", "must be at least 1"));
        }
        let candidate_rows = match &self.candidate_rows {
            Some(s) => candidate_rows_from(s)?,
            None => CandidateRows::Operator,
        };
        let ridge = match &self.ridge {
            None => Ridge::Auto,
            Some(RidgeValue::Keyword(k)) if k.eq_ignore_ascii_case("auto") => Ridge::Auto,
            Some(RidgeValue::Keyword(k)) => {
                return Err(CliError::config("ridge", format!("expected \"auto\" or a number, got '{k}'")))
            }
            Some(RidgeValue::Value(g)) if *g >= 0.0 => Ridge::Fixed(*g),
            Some(RidgeValue::Value(g)) => return Err(CliError::config("ridge", format!("must be nonnegative, got {g}"))),
        };
        let rank_tol = self.rank_tol.unwrap_or(1e-12);
        if !(rank_tol >= 0.0) {
            return Err(CliError::config("rank_tol", format!("must be nonnegative, got {rank_tol}")));
        }
        let order = self.order.unwrap_or(def.order);
        let adaptivity = if self.adaptive.unwrap_or(false) {
            let a = Adaptivity {
                min_order: self.min_order.unwrap_or(1),
                max_order: self.max_order.unwrap_or(order),
                eps_data: self.eps_data.unwrap_or(1e-6),
                eps_pde: self.eps_pde.unwrap_or(1e-6),
                eps_bc: self.eps_bc.unwrap_or(1e-6),
            };
            if a.min_order > a.max_order {
                return Err(CliError::config("min_order", format!("exceeds max_order {}", a.max_order)));
            }
            Some(a)
        } else {
            None
        };
        let repeats = self.repeats.unwrap_or(1);
        if repeats == 0 {
            return Err(CliError::config("repeats", "must be at least 1"));
        }
        let n_eval = self.n_eval.unwrap_or(10_000);
        if n_eval == 0 {
            return Err(CliError::config("n_eval", "must be at least 1"));
        }
        let (grid_nx, grid_ny) = (self.grid_nx.unwrap_or(51), self.grid_ny.unwrap_or(51));
        if grid_nx < 2 || grid_ny < 2 {
            return Err(CliError::config(if grid_nx < 2 { "grid_nx" } else { "grid_ny" }, "must be at least 2"));
        }
        let uq_time = self.uq_time.unwrap_or(1.0);
        if !uq_time.is_finite() {
            return Err(CliError::config("uq_time", "must be finite"));
        }

        Ok(RunConfig {
            problem,
            method,
            strategy,
            variants,
            order,
            q,
            n_v,
            n_bc: self.n_bc.unwrap_or(def.n_bc),
            n_init: self.n_init.unwrap_or(def.n_init),
            n_data: self.n_data.unwrap_or(def.n_data),
            ic_mode,
            normalize_rows: self.normalize_rows.unwrap_or(false),
            oversample_k,
            candidate_rows,
            ridge,
            rank_tol,
            adaptivity,
            seed: self.seed.unwrap_or(0),
            repeats,
            n_eval,
            output_dir: PathBuf::from(self.output_dir.clone().unwrap_or_else(|| "pc2-out".into())),
            record_timing: self.record_timing.unwrap_or(true),
            problem_options,
            grid_nx,
            grid_ny,
            uq_time,
            reference_samples: self.reference_samples.unwrap_or(64).max(1),
        })
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        RawConfig::load(path)?.resolve()
    }

    pub fn problem_def(&self) -> CliResult<ProblemDef> {
        problem_by_name(&self.problem, &self.problem_options).map_err(|e| CliError::config("problem", e.to_string()))
    }

    /// Experiment settings for one cell.
    pub fn experiment(&self, problem: &ProblemDef, variant: Variant, n_v: usize, seed: u64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::for_problem(problem, variant.method);
        cfg.order = self.order;
        cfg.q = self.q;
        cfg.n_v = n_v;
        cfg.n_bc = self.n_bc;
        cfg.n_init = self.n_init;
        cfg.n_data = self.n_data;
        cfg.ic_mode = self.ic_mode;
        cfg.strategy = variant.strategy;
        cfg.oversample_k = self.oversample_k;
        cfg.candidate_rows = self.candidate_rows;
        cfg.normalize_rows = self.normalize_rows;
        cfg.solver.ridge = self.ridge;
        cfg.solver.rank_tol = self.rank_tol;
        cfg.solver.adaptivity = self.adaptivity;
        cfg.n_eval = self.n_eval;
        cfg.seed = seed;
        cfg
    }

    /// The configuration with every key written out.
    pub fn to_raw(&self) -> RawConfig {
        let a = self.adaptivity;
        RawConfig {
            format_version: Some(FORMAT_VERSION),
            problem: Some(self.problem.clone()),
            method: Some(self.method.to_string()),
            strategy: Some(self.strategy.to_string()),
            methods: Some(self.variants.iter().map(|v| v.to_string()).collect()),
            order: Some(self.order),
            q: Some(self.q),
            n_v: Some(if self.n_v.len() == 1 { OneOrMany::One(self.n_v[0]) } else { OneOrMany::Many(self.n_v.clone()) }),
            n_bc: Some(self.n_bc),
            n_init: Some(self.n_init),
            n_data: Some(self.n_data),
            ic_mode: Some(self.ic_mode.to_string()),
            normalize_rows: Some(self.normalize_rows),
            oversample_k: Some(self.oversample_k),
            candidate_rows: Some(candidate_rows_name(self.candidate_rows).into()),
            ridge: Some(match self.ridge {
                Ridge::Auto => RidgeValue::Keyword("auto".into()),
                Ridge::Fixed(g) => RidgeValue::Value(g),
            }),
            rank_tol: Some(self.rank_tol),
            adaptive: Some(a.is_some()),
            min_order: a.map(|a| a.min_order),
            max_order: a.map(|a| a.max_order),
            eps_data: a.map(|a| a.eps_data),
            eps_pde: a.map(|a| a.eps_pde),
            eps_bc: a.map(|a| a.eps_bc),
            seed: Some(self.seed),
            repeats: Some(self.repeats),
            n_eval: Some(self.n_eval),
            output_dir: Some(self.output_dir.display().to_string()),
            record_timing: Some(self.record_timing),
            heat_kl_modes: Some(self.problem_options.heat_kl_modes),
            eval_realizations: Some(self.problem_options.eval_realizations),
            grid_nx: Some(self.grid_nx),
            grid_ny: Some(self.grid_ny),
            uq_time: Some(self.uq_time),
            reference_samples: Some(self.reference_samples),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("flat config always serializes")
    }
}
