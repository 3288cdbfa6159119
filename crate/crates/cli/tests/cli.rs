use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liftdescent"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn drift1d_cost_history_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["run", "--benchmark", "drift1d", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("cost_history.csv")).unwrap();
    let rows: Vec<(usize, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (i, c) = l.split_once(',').unwrap();
            (i.parse().unwrap(), c.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], (0, 1.0));
    assert_eq!(rows[1].0, 1);
    assert!(rows[1].1.abs() <= 1e-12);
    let control = fs::read_to_string(dir.path().join("control.csv")).unwrap();
    assert_eq!(control, "t_start,u_1\n0,-1\n");
}

#[test]
fn kuramoto_sync_reports_twelve_primal_solves() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["run", "--benchmark", "kuramoto_sync", "--seedless", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let r = report(dir.path());
    assert_eq!(r["solve_counts"]["total_primal"], 12);
    assert_eq!(r["seedless"], true);
    assert_eq!(r["config"]["descent"]["N"], 3);
    for t in ["0", "2.5", "5"] {
        assert!(dir.path().join(format!("density_t{t}.csv")).exists());
    }
}

#[test]
fn matching_run_echoes_weighted_flag_and_both_cost_forms() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "run",
        "--benchmark",
        "kuramoto_matching",
        "--cost.weighted=true",
        "--grid.G=128",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["config"]["cost"]["weighted"], true);
    assert_eq!(r["config"]["grid"]["G"], 128);
    let m = &r["matching_costs"];
    for at in ["initial", "terminal"] {
        for form in ["unweighted", "weighted"] {
            assert!(m[at][form].as_f64().unwrap() > 0.0, "{at}.{form}");
        }
    }
    let first = r["cost_history"][0].as_f64().unwrap();
    assert_eq!(first, m["initial"]["weighted"].as_f64().unwrap());
}

#[test]
fn report_config_echo_reproduces_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = bin(&["run", "--benchmark", "reach2d", "--descent.N_iter=2", "--out", a.path().to_str().unwrap()]);
    assert!(out.status.success());
    let echo = a.path().join("report.json");
    let out = bin(&["run", "--config", echo.to_str().unwrap(), "--out", b.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(a.path())["cost_history"], report(b.path())["cost_history"]);
    assert_eq!(report(b.path())["config"]["descent"]["N_iter"], 2);
}

#[test]
fn toml_config_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "benchmark = \"reach2d\"\n\n[descent]\nN = 4\nepsilon = 0.05\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = bin(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--descent.N=8",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out_dir);
    assert_eq!(r["config"]["descent"]["N"], 8);
    assert_eq!(r["config"]["descent"]["epsilon"], 0.05);
    assert_eq!(r["final_control"].as_array().unwrap().len(), 8);
}

#[test]
fn config_errors_exit_two_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "benchmark = \"drift1d\"\ndescent.windows = 3\n").unwrap();
    let out = bin(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("windows"), "{err}");

    let out = bin(&["run", "--benchmark", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let out = bin(&["run", "--benchmark", "kuramoto_sync", "--system.cfl=2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.cfl"));
    let out = bin(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn divergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "run",
        "--benchmark",
        "bilinear1d",
        "--system.T=10000",
        "--system.dt=100",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report(dir.path())["status"], "diverged");
}

#[test]
fn verify_increment_and_list() {
    let out = bin(&["verify", "increment"]);
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.lines().filter(|l| l.starts_with("PASS")).count() >= 4, "{table}");
    assert_eq!(bin(&["verify", "bogus"]).status.code(), Some(2));

    let out = bin(&["list-benchmarks"]);
    let names: Vec<String> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| l.split_whitespace().next().unwrap().to_string())
        .collect();
    assert_eq!(
        names,
        ["kuramoto_sync", "kuramoto_matching", "attention_torus", "drift1d", "bilinear1d", "reach2d"]
    );
}
