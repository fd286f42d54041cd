use std::f64::consts::PI;

use pc2_core::benchmarks::{
    fd_heat, fit_problem_adaptive, moment_fields, problem_toy_beam, run_experiment, ExperimentConfig, FdHeatSettings,
    HeatBoundary,
};
use pc2_core::sampling::rng_for;
use pc2_core::solvers::{Adaptivity, Method};
use rand::Rng;

#[test]
fn toy_beam_sulm_reaches_analytic_solution() {
    let p = problem_toy_beam().unwrap();
    let mut cfg = ExperimentConfig::for_problem(&p, Method::Sulm);
    cfg.n_eval = 5000;
    let out = run_experiment(&p, &cfg).unwrap();
    assert!(out.report.mse <= 1e-8, "mse {}", out.report.mse);
    assert_eq!(out.n_data_rows, 0);
    assert_eq!(out.n_constraints, 240);
}

#[test]
fn toy_beam_moments_match_closed_form_and_monte_carlo() {
    let p = problem_toy_beam().unwrap();
    let cfg = ExperimentConfig { n_eval: 500, ..ExperimentConfig::for_problem(&p, Method::Kkt) };
    let model = run_experiment(&p, &cfg).unwrap().fit.model;
    let xs = [0.2, 0.5, 0.8];
    let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let m = moment_fields(&model, &pts).unwrap();

    // Load q ~ U[1, 2] enters linearly: mean 1.5 w(x), std w(x)/√12.
    for (k, &x) in xs.iter().enumerate() {
        let w = (-x.powi(4) + 2.0 * x.powi(3) - x) / 24.0;
        assert!((m.mean[k] - 1.5 * w).abs() < 1e-7 * w.abs());
        assert!((m.std[k] - w.abs() / 12f64.sqrt()).abs() < 1e-6 * w.abs());
    }

    let mut rng = rng_for(17, 0);
    let n = 100_000;
    let qs: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..2.0)).collect();
    for (k, &x) in xs.iter().enumerate() {
        let input: Vec<Vec<f64>> = qs.iter().map(|&q| vec![x, q]).collect();
        let v = model.predict(&input).unwrap();
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = (v.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - m.mean[k]).abs() <= 5e-3 * m.mean[k].abs());
        assert!((std - m.std[k]).abs() <= 1e-2 * m.std[k]);
    }
}

#[test]
fn adaptive_toy_beam_stops_by_order_six() {
    let p = problem_toy_beam().unwrap();
    let mut cfg = ExperimentConfig::for_problem(&p, Method::Kkt);
    cfg.solver.adaptivity =
        Some(Adaptivity { min_order: 1, max_order: 10, eps_data: 1e-8, eps_pde: 1e-8, eps_bc: 1e-8 });
    let fit = fit_problem_adaptive(&p, &cfg).unwrap();
    let order = fit.diagnostics.chosen_order;
    assert!((4..=6).contains(&order), "chose p = {order}");
    assert!(fit.diagnostics.warnings.is_empty());
}

#[test]
fn neumann_fd_conserves_spatial_mean() {
    let settings = FdHeatSettings { nodes: 41, dt: 1e-3, t_end: 0.5, save_every: 50, boundary: HeatBoundary::Neumann };
    let sol = fd_heat(&settings, 0.05, |x, y| 1.0 + (PI * x).cos() * (2.0 * PI * y).cos() + 0.3 * x, None).unwrap();
    let m0 = sol.spatial_mean(0);
    for k in 1..sol.times().len() {
        assert!((sol.spatial_mean(k) - m0).abs() < 1e-10, "t = {}", sol.times()[k]);
    }
}

#[test]
fn dirichlet_fd_tracks_decaying_mode() {
    let d = 0.02;
    let settings = FdHeatSettings { nodes: 81, dt: 5e-4, t_end: 0.5, save_every: 100, boundary: HeatBoundary::Dirichlet };
    let sol = fd_heat(&settings, d, |x, y| (PI * x).sin() * (PI * y).sin(), None).unwrap();
    let decay = (-2.0 * PI * PI * d * 0.5).exp();
    let exact = decay * (PI * 0.3).sin() * (PI * 0.6).sin();
    assert!((sol.eval(0.3, 0.6, 0.5) - exact).abs() < 1e-4);
}
