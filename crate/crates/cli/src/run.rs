//! The `run` command: build a benchmark, run the descent, write artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use liftdescent::benchmarks::{build, Benchmark, BuiltProblem, Problem};
use liftdescent::meanfield::{CostKind, FieldKind};
use liftdescent::{
    run_descent, solve_continuity, ControlSystem, DescentFailure, Error, GridDensity, MeanFieldSystem,
    PiecewiseConstantControl, RunReport, Signal,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::{control_csv, cost_history_csv, density_csv, snapshot_name, write_atomic};
use crate::CliError;

pub const DEFAULT_OUT: &str = "out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveCountsOut {
    pub reference_solves: u64,
    pub corrected_solves: u64,
    pub propagation_solves: u64,
    pub perturbation_short_solves: u64,
    pub total_primal: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingForms {
    pub unweighted: f64,
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingCosts {
    pub initial: MatchingForms,
    pub terminal: MatchingForms,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub benchmark: String,
    /// `"ok"` or `"diverged"`.
    pub status: String,
    /// Fully resolved configuration; re-running with it reproduces the run.
    pub config: RunConfig,
    pub seedless: bool,
    pub cost_history: Vec<f64>,
    pub solve_counts: SolveCountsOut,
    pub switch_count: usize,
    pub component_switch_count: usize,
    /// Seconds spent in the descent itself.
    pub wall_time: f64,
    pub final_control: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_mass_drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matching_costs: Option<MatchingCosts>,
    pub snapshots: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub report: ReportFile,
}

fn resolved_config(cfg: &RunConfig, bench: Benchmark, out: &Path, built: &BuiltProblem) -> RunConfig {
    let mut echo = RunConfig {
        benchmark: Some(bench.name().to_string()),
        out: Some(out.to_path_buf()),
        snapshots: cfg.snapshots.clone(),
        ..Default::default()
    };
    let descent = match built {
        BuiltProblem::MeanField(p) => {
            let s = p.system.settings();
            echo.grid.cells = Some(p.system.grid().cells()[0]);
            echo.system.cfl = Some(s.cfl);
            echo.system.dt_max = Some(s.dt_max);
            if let FieldKind::VonMisesAttention { kappa } = p.system.field() {
                echo.system.kappa = Some(kappa);
            }
            if let CostKind::Matching { weighted, normalized, .. } = p.system.cost_kind() {
                echo.cost.weighted = Some(*weighted);
                echo.cost.normalize_target = Some(*normalized);
            }
            echo.system.horizon = Some(p.horizon);
            &p.descent
        }
        BuiltProblem::Ode(p) => {
            echo.system.dt = Some(p.system.dt());
            echo.system.horizon = Some(p.horizon);
            &p.descent
        }
    };
    echo.descent.windows = Some(descent.windows);
    echo.descent.epsilon = Some(descent.epsilon);
    echo.descent.iterations = Some(descent.iterations);
    echo
}

fn snapshot_times(cfg: &RunConfig, built: &BuiltProblem) -> Result<Vec<f64>, CliError> {
    let BuiltProblem::MeanField(p) = built else {
        if cfg.snapshots.times.is_some() {
            return Err(CliError::Config(
                "snapshots.times: density snapshots apply to mean-field benchmarks only".into(),
            ));
        }
        return Ok(Vec::new());
    };
    let t = p.horizon;
    let mut times = match &cfg.snapshots.times {
        Some(ts) => ts.clone(),
        None if p.system.grid().dim() == 1 => vec![0.0, 0.5 * t, t],
        None => vec![0.0, 0.25 * t, 0.5 * t, 0.75 * t, t],
    };
    if let Some(bad) = times.iter().find(|&&s| s > t) {
        return Err(CliError::Config(format!("snapshots.times: {bad} exceeds the horizon T = {t}")));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    Ok(times)
}

fn report_file(bench: Benchmark, echo: RunConfig, seedless: bool, status: &str, r: &RunReport) -> ReportFile {
    let c = r.solve_counts;
    ReportFile {
        benchmark: bench.name().to_string(),
        status: status.to_string(),
        config: echo,
        seedless,
        cost_history: r.cost_history.clone(),
        solve_counts: SolveCountsOut {
            reference_solves: c.reference_solves,
            corrected_solves: c.corrected_solves,
            propagation_solves: c.propagation_solves,
            perturbation_short_solves: c.perturbation_short_solves,
            total_primal: c.primal_total(),
        },
        switch_count: r.switch_count,
        component_switch_count: r.component_switch_count,
        wall_time: r.wall_time.as_secs_f64(),
        final_control: r.final_control.values().to_vec(),
        max_mass_drift: None,
        matching_costs: None,
        snapshots: Vec::new(),
    }
}

fn descend<S: ControlSystem>(p: &Problem<S>) -> Result<RunReport, DescentFailure> {
    run_descent(&p.system, &p.initial, p.horizon, &p.descent)
}

/// Re-rolls the final control through the snapshot times and on to `T`.
fn snapshots(
    sys: &MeanFieldSystem,
    rho0: &GridDensity,
    u: &PiecewiseConstantControl,
    times: &[f64],
    horizon: f64,
) -> Result<(Vec<(f64, GridDensity)>, GridDensity), Error> {
    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &s in times {
        rho = solve_continuity(sys, &rho, Signal::Piecewise(u), t, s)?;
        t = s;
        out.push((s, rho.clone()));
    }
    let terminal = solve_continuity(sys, &rho, Signal::Piecewise(u), t, horizon)?;
    Ok((out, terminal))
}

pub fn execute(cfg: RunConfig, seedless: bool) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let bench = cfg.benchmark()?;
    let built = build(bench, &cfg.overrides())?;
    match &built {
        BuiltProblem::MeanField(p) => p.descent.validate(p.horizon, p.system.control_dim())?,
        BuiltProblem::Ode(p) => p.descent.validate(p.horizon, p.system.control_dim())?,
    }
    let times = snapshot_times(&cfg, &built)?;
    let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut echo = resolved_config(&cfg, bench, &out_dir, &built);
    if matches!(built, BuiltProblem::MeanField(_)) {
        echo.snapshots.times = Some(times.clone());
    }
    fs::create_dir_all(&out_dir)?;

    let result = match &built {
        BuiltProblem::MeanField(p) => descend(p),
        BuiltProblem::Ode(p) => descend(p),
    };
    let report = match result {
        Ok(r) => r,
        Err(fail) => {
            let rf = report_file(bench, echo, seedless, "diverged", &fail.partial);
            write_atomic(&out_dir.join("report.json"), &serde_json::to_vec_pretty(&rf).expect("serializable"))?;
            return Err(fail.error.into());
        }
    };

    let mut rf = report_file(bench, echo, seedless, "ok", &report);
    if let BuiltProblem::MeanField(p) = &built {
        let (snaps, terminal) = snapshots(&p.system, &p.initial, &report.final_control, &times, p.horizon)?;
        for (t, rho) in &snaps {
            let name = snapshot_name(*t);
            write_atomic(&out_dir.join(&name), &density_csv(rho)?)?;
            rf.snapshots.push(name);
        }
        let kind = p.system.cost_kind();
        if let (Some((u0, w0)), Some((u1, w1))) = (kind.matching_forms(&p.initial), kind.matching_forms(&terminal)) {
            rf.matching_costs = Some(MatchingCosts {
                initial: MatchingForms {
                    unweighted: u0,
                    weighted: w0,
                },
                terminal: MatchingForms {
                    unweighted: u1,
                    weighted: w1,
                },
            });
        }
        rf.max_mass_drift = Some(p.system.max_mass_drift());
    }
    write_atomic(&out_dir.join("control.csv"), control_csv(&report.final_control).as_bytes())?;
    write_atomic(&out_dir.join("cost_history.csv"), cost_history_csv(&report.cost_history).as_bytes())?;
    write_atomic(&out_dir.join("report.json"), &serde_json::to_vec_pretty(&rf).expect("serializable"))?;
    Ok(RunOutcome { out_dir, report: rf })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str, out: &std::path::Path) -> RunConfig {
        let mut c = RunConfig::from_toml(text).unwrap();
        c.out = Some(out.to_path_buf());
        c
    }

    #[test]
    fn drift_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let o = execute(cfg("benchmark = \"drift1d\"", dir.path()), true).unwrap();
        assert_eq!(o.report.cost_history.len(), 2);
        assert_eq!(o.report.solve_counts.total_primal, 3);
        assert!(o.report.snapshots.is_empty());
        for f in ["report.json", "control.csv", "cost_history.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert_eq!(o.report.config.descent.windows, Some(1));
        assert_eq!(o.report.config.system.horizon, Some(1.0));
    }

    #[test]
    fn small_kuramoto_run_writes_default_snapshots() {
        let dir = tempfile::tempdir().unwrap();
        let o = execute(cfg("benchmark = \"kuramoto_matching\"\ngrid.G = 64", dir.path()), false).unwrap();
        assert_eq!(o.report.snapshots, vec!["density_t0.csv", "density_t2.5.csv", "density_t5.csv"]);
        let m = o.report.matching_costs.unwrap();
        assert!(m.initial.unweighted > 0.0 && m.initial.weighted > 0.0);
        let last = *o.report.cost_history.last().unwrap();
        assert!((m.terminal.unweighted - last).abs() <= 1e-3 * last);
        let first = fs::read_to_string(dir.path().join("density_t0.csv")).unwrap();
        assert_eq!(first.lines().next(), Some("x,rho"));
        assert_eq!(first.lines().count(), 65);
    }

    #[test]
    fn inapplicable_overrides_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let e = execute(cfg("benchmark = \"drift1d\"\ngrid.G = 64", dir.path()), false).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = execute(cfg("benchmark = \"kuramoto_sync\"\nsnapshots.times = [9.0]", dir.path()), false).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = execute(cfg("benchmark = \"drift1d\"\ndescent.epsilon = 3.0", dir.path()), false).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(!dir.path().join("report.json").exists());
    }

    #[test]
    fn divergence_maps_to_exit_three_with_partial_report() {
        let dir = tempfile::tempdir().unwrap();
        let e = execute(cfg("benchmark = \"bilinear1d\"\nsystem.T = 10000.0\nsystem.dt = 100.0", dir.path()), false)
            .unwrap_err();
        assert_eq!(e.exit_code(), 3, "{e}");
        let r: ReportFile = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(r.status, "diverged");
    }
}
