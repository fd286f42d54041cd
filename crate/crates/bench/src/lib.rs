//! Fixtures shared by the benchmarks.

use pc2_core::benchmarks::{build_system, problem_heat_dirichlet, ExperimentConfig, IcMode};
use pc2_core::solvers::TrainingSystem;
use pc2_core::{Method, Result};

/// Heat-Dirichlet training system at order `order` with roughly `n_c`
/// constraint rows (70% PDE, 20% boundary, 10% hard initial condition).
pub fn heat_system(order: usize, n_c: usize) -> Result<TrainingSystem> {
    let p = problem_heat_dirichlet()?;
    let mut cfg = ExperimentConfig::for_problem(&p, Method::Sulm);
    cfg.order = order;
    cfg.ic_mode = IcMode::Hard;
    cfg.n_bc = n_c / 5;
    cfg.n_init = n_c / 10;
    cfg.n_v = n_c - cfg.n_bc - cfg.n_init;
    build_system(&p, &cfg)
}
