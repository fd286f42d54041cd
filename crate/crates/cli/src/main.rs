use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pc2_cli::acceptance::{gating_failures, run_all, CriterionResult, CRITERIA};
use pc2_cli::commands::{cmd_sweep, cmd_train, cmd_uq, ensure_dir, write_csv, VERSION};
use pc2_cli::{CliError, CliResult, RunConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "pc2", version, about = "Physics-informed polynomial chaos experiments")]
struct Cli {
    /// Worker threads for sweeps and dense linear algebra.
    #[arg(long, global = true, env = "PC2_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one surrogate; writes model.bin, diagnostics.csv and metrics.csv.
    Train(Common),
    /// Fit every method × n_V × repeat cell; writes sweep.csv.
    Sweep(Common),
    /// Mean and standard deviation fields of a trained model.
    Uq {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
    },
    /// Run the acceptance suite; exit status 0 iff every gating criterion passes.
    Verify {
        #[arg(long, default_value = "pc2-verify")]
        out: PathBuf,
        /// Run only these criteria (1-8, S, N); repeatable.
        #[arg(long)]
        only: Vec<String>,
    },
}

fn load(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn init_threads(threads: Option<usize>) -> CliResult<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::config("threads", "must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config("threads", e.to_string()))?;
    faer::set_global_parallelism(if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
    Ok(())
}

#[derive(Serialize)]
struct AcceptanceRow<'a> {
    id: &'a str,
    criterion: &'a str,
    gating: bool,
    passed: bool,
    seconds: f64,
    detail: &'a str,
}

fn verify(out: &Path, only: &[String]) -> CliResult<()> {
    if let Some(bad) = only.iter().find(|o| !CRITERIA.iter().any(|c| c.eq_ignore_ascii_case(o))) {
        return Err(CliError::config("only", format!("unknown criterion '{bad}', expected one of {}", CRITERIA.join(", "))));
    }
    ensure_dir(out)?;
    println!("{VERSION} acceptance suite");
    let results = run_all(out, only, |r| println!("{r}"));
    let rows: Vec<AcceptanceRow> = results.iter().map(row).collect();
    write_csv(&out.join("acceptance.csv"), &rows, &["id", "criterion", "gating", "passed", "seconds", "detail"])?;
    let failed = gating_failures(&results);
    let gating = results.iter().filter(|r| r.gating).count();
    println!("{} of {gating} gating criteria passed", gating - failed);
    if failed > 0 {
        return Err(CliError::Verify(failed));
    }
    Ok(())
}

fn row(r: &CriterionResult) -> AcceptanceRow<'_> {
    AcceptanceRow { id: r.id, criterion: r.title, gating: r.gating, passed: r.passed, seconds: r.seconds, detail: &r.detail }
}

fn run(cli: Cli) -> CliResult<()> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Train(common) => {
            let cfg = load(&common)?;
            let out = cmd_train(&cfg)?;
            let d = &out.fit.diagnostics;
            println!(
                "{} {} p={} card={}: test mse {:.3e}, data {:.2e}, pde {:.2e}, bc {:.2e}, fit {:.3}s",
                cfg.problem,
                cfg.method,
                d.chosen_order,
                out.fit.model.basis().cardinality(),
                out.report.mse,
                d.data_mse,
                d.pde_residual_mse,
                d.bc_residual_mse,
                out.fit_seconds
            );
            for w in &d.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Sweep(common) => {
            let cfg = load(&common)?;
            let rows = cmd_sweep(&cfg)?;
            println!("{} rows written to {}", rows.len(), cfg.output_dir.join("sweep.csv").display());
        }
        Command::Uq { common, model } => {
            let cfg = load(&common)?;
            let uq = cmd_uq(&cfg, &model)?;
            let worst = uq.errors.iter().map(|e| e.mean_error.abs()).fold(0.0, f64::max);
            println!("{} field points written to {}; max |mean error| {worst:.3e}", uq.mean.len(), cfg.output_dir.display());
        }
        Command::Verify { out, only } => verify(&out, &only)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
