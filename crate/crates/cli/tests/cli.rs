use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pc2_core::io::{load_model, save_model};
use pc2_core::Pc2Model;

fn pc2(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pc2")).args(args).env_remove("PC2_THREADS").output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

const TOY: &str = "format_version = 1\nproblem = \"toy-beam\"\nmethod = \"KKT\"\nn_eval = 2000\n";

fn unit_load_deflection(x: f64) -> f64 {
    (-x.powi(4) + 2.0 * x.powi(3) - x) / 24.0
}

#[test]
fn train_toy_beam_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "toy.toml", TOY);
    let out = tmp.path().join("nested/run");
    let o = pc2(&["train", "--config", arg(&cfg), "--out", arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = read_csv(&out.join("diagnostics.csv"));
    assert_eq!(header, ["stage", "wall_time_s", "data_mse", "pde_mse", "bc_mse", "chosen_p"]);
    assert!(!rows.is_empty());
    assert!(column(&out.join("diagnostics.csv"), "data_mse").iter().all(|&v| v <= 1e-10));
    assert!(column(&out.join("metrics.csv"), "mse")[0] <= 1e-10);
    assert_eq!(&fs::read(out.join("model.bin")).unwrap()[..4], b"PC2M");
    assert!(!fs::read_to_string(out.join("version.txt")).unwrap().trim().is_empty());

    // The effective config reproduces the run.
    let again = tmp.path().join("again");
    let o = pc2(&["train", "--config", arg(&out.join("effective_config.toml")), "--out", arg(&again)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(column(&out.join("metrics.csv"), "mse"), column(&again.join("metrics.csv"), "mse"));
}

#[test]
fn unknown_method_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", "problem = \"toy-beam\"\nmethod = \"FOO\"\n");
    let o = pc2(&["train", "--config", arg(&cfg), "--out", arg(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`method`"));
}

#[test]
fn unknown_key_and_bad_toml_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, text) in ["problem = \"toy-beam\"\nsolver = \"KKT\"\n", "problem = toy-beam\n", "format_version = 2\nproblem = \"toy-beam\"\n"]
        .iter()
        .enumerate()
    {
        let cfg = write_config(tmp.path(), &format!("c{i}.toml"), text);
        let o = pc2(&["train", "--config", arg(&cfg)]);
        assert_eq!(o.status.code(), Some(2), "{text}");
    }
}

#[test]
fn fit_failure_exits_3() {
    // The toy beam has no reference data, so plain least squares has nothing to fit.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "ols.toml", "problem = \"toy-beam\"\nmethod = \"OLS\"\n");
    let o = pc2(&["train", "--config", arg(&cfg), "--out", arg(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn reruns_without_timing_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{TOY}strategy = \"d-optimal\"\nrecord_timing = false\nseed = 7\n");
    let cfg = write_config(tmp.path(), "det.toml", &text);
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        let o = pc2(&["train", "--config", arg(&cfg), "--out", arg(d)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["model.bin", "diagnostics.csv", "metrics.csv"] {
        assert_eq!(fs::read(dirs[0].join(f)).unwrap(), fs::read(dirs[1].join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn sweep_covers_every_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "problem = \"toy-beam\"\nmethods = [\"KKT\", \"SULM\", \"KKT-D\", \"SULM-D\"]\nn_v = [40, 80, 120]\nrepeats = 2\nn_eval = 500\n";
    let cfg = write_config(tmp.path(), "sweep.toml", text);
    let out = tmp.path().join("sweep");
    let o = pc2(&["--threads", "2", "sweep", "--config", arg(&cfg), "--out", arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let (header, rows) = read_csv(&out.join("sweep.csv"));
    assert_eq!(header, ["method", "n_V", "repeat", "seed", "mse", "wall_time_s", "total_time_s"]);
    assert_eq!(rows.len(), 24);
    assert!(column(&out.join("sweep.csv"), "wall_time_s").iter().all(|&t| t > 0.0));
    let methods: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(methods.len(), 4);
    let (_, summary) = read_csv(&out.join("sweep_summary.csv"));
    assert_eq!(summary.len(), 12);
}

#[test]
fn uq_mean_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "toy.toml", &format!("{TOY}grid_nx = 11\nreference_samples = 16\n"));
    let out = tmp.path().join("run");
    assert!(pc2(&["train", "--config", arg(&cfg), "--out", arg(&out)]).status.success());
    let o = pc2(&["uq", "--config", arg(&cfg), "--out", arg(&out), "--model", arg(&out.join("model.bin"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let xs = column(&out.join("mean_field.csv"), "x");
    let mean = column(&out.join("mean_field.csv"), "value");
    let std = column(&out.join("std_field.csv"), "value");
    assert_eq!(xs.len(), 11);
    for ((&x, &m), &s) in xs.iter().zip(&mean).zip(&std) {
        let w = unit_load_deflection(x);
        assert!((m - 1.5 * w).abs() < 1e-8, "x={x}: mean {m} vs {}", 1.5 * w);
        assert!((s - w.abs() / 12f64.sqrt()).abs() < 1e-8, "x={x}: std {s}");
    }
    assert!(out.join("error_vs_reference.csv").is_file());
}

#[test]
fn uq_of_deterministic_only_model_has_zero_std() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "toy.toml", &format!("{TOY}grid_nx = 9\nreference_samples = 4\n"));
    let out = tmp.path().join("run");
    assert!(pc2(&["train", "--config", arg(&cfg), "--out", arg(&out)]).status.success());

    // Keep only terms without a random degree.
    let (model, diag) = load_model(out.join("model.bin")).unwrap();
    let beta: Vec<f64> = model
        .basis()
        .indices()
        .iter()
        .zip(model.coefficients())
        .map(|(a, &b)| if a.degrees()[1] == 0 { b } else { 0.0 })
        .collect();
    let det = out.join("det.bin");
    save_model(&det, &Pc2Model::new(model.basis().clone(), beta).unwrap(), &diag).unwrap();

    let o = pc2(&["uq", "--config", arg(&cfg), "--out", arg(&out), "--model", arg(&det)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(column(&out.join("std_field.csv"), "value").iter().all(|&s| s == 0.0));
}

#[test]
fn uq_rejects_model_of_another_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "toy.toml", TOY);
    let out = tmp.path().join("run");
    assert!(pc2(&["train", "--config", arg(&cfg), "--out", arg(&out)]).status.success());
    let heat = write_config(tmp.path(), "heat.toml", "problem = \"heat-dirichlet\"\n");
    let o = pc2(&["uq", "--config", arg(&heat), "--out", arg(&out), "--model", arg(&out.join("model.bin"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_creates_missing_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("deep/verify");
    let o = pc2(&["verify", "--out", arg(&out), "--only", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS 2")), "{stdout}");
    let (_, rows) = read_csv(&out.join("acceptance.csv"));
    assert_eq!(rows.len(), 1);
}

#[test]
fn verify_rejects_unknown_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pc2(&["verify", "--out", arg(tmp.path()), "--only", "42"]);
    assert_eq!(o.status.code(), Some(2));
}
