//! Property suites behind `verify <suite>`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use liftdescent::benchmarks::{
    build, build_kuramoto_sync, build_toy_ode, kuramoto_initial_cdf, Benchmark, BuiltProblem, Overrides,
};
use liftdescent::meanfield::{kuramoto_interaction_direct, kuramoto_velocity};
use liftdescent::oracles::{kuramoto_particle_order, quantile_phases};
use liftdescent::{
    run_descent, solve_continuity, verify_increment_formula, ControlBox, PiecewiseConstantControl, Signal,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Increment,
    Conservation,
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Increment, Suite::Conservation, Suite::Oracle];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Increment => "increment",
            Suite::Conservation => "conservation",
            Suite::Oracle => "oracle",
        }
    }

    pub fn from_name(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown suite '{s}' (increment, conservation, oracle)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: Bound,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound: Bound::AtMost(tol),
        }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, min: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound: Bound::AtLeast(min),
        }
    }

    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost(t) => self.measured <= t,
            Bound::AtLeast(t) => self.measured >= t,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, b) = match self.bound {
            Bound::AtMost(t) => ("<=", t),
            Bound::AtLeast(t) => (">=", t),
        };
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict}  {:<44} {:>12.4e} {op} {:<10.1e}", self.name, self.measured, b)
    }
}

pub fn run_suite(suite: Suite) -> Result<Vec<Check>, CliError> {
    match suite {
        Suite::Increment => increment(),
        Suite::Conservation => conservation(),
        Suite::Oracle => oracle(),
    }
}

/// Increment formula on `bilinear1d` (`ū ≡ 0`, `u ≡ 1`, exact lhs `e - 1`).
pub fn increment() -> Result<Vec<Check>, CliError> {
    let p = build_toy_ode("bilinear1d", &Overrides::default())?;
    let ubar = PiecewiseConstantControl::zeros(p.horizon, 1, 1)?;
    let u = PiecewiseConstantControl::new(p.horizon, vec![vec![1.0]], ControlBox::unit(1))?;
    let mut checks = Vec::new();
    let mut errs = Vec::new();
    for (eps, q) in [(1e-3, 50), (1e-4, 200), (1e-5, 800)] {
        let c = verify_increment_formula(&p.system, &p.initial, &ubar, &u, q, eps)?;
        if errs.is_empty() {
            checks.push(Check::at_most("bilinear1d lhs vs e - 1", (c.lhs - (std::f64::consts::E - 1.0)).abs(), 1e-9));
        }
        checks.push(Check::at_most(format!("bilinear1d |lhs - rhs| eps_fd={eps:e} q={q}"), c.abs_err, 5e-3));
        errs.push(c.abs_err);
    }
    let worst_ratio = errs.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    checks.push(Check::at_most("ladder error ratio (monotone if < 1)", worst_ratio, 1.0 - f64::EPSILON));
    Ok(checks)
}

/// Mass drift of full default descents on every mean-field benchmark, and
/// positivity of the terminal densities.
pub fn conservation() -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    for b in Benchmark::ALL.into_iter().filter(|b| b.is_mean_field()) {
        let BuiltProblem::MeanField(p) = build(b, &Overrides::default())? else {
            continue;
        };
        let r = run_descent(&p.system, &p.initial, p.horizon, &p.descent).map_err(|f| CliError::from(f.error))?;
        let terminal = solve_continuity(&p.system, &p.initial, Signal::Piecewise(&r.final_control), 0.0, p.horizon)?;
        checks.push(Check::at_most(format!("{} mass drift", b.name()), p.system.max_mass_drift(), 1e-10));
        checks.push(Check::at_least(format!("{} terminal min density", b.name()), terminal.min(), 0.0));
    }
    Ok(checks)
}

fn rotation_error(g: usize) -> Result<f64, CliError> {
    let p = build_kuramoto_sync(&Overrides {
        grid: Some(g),
        ..Default::default()
    })?;
    let target = p.initial.circular_mean() + PI;
    let out = solve_continuity(&p.system, &p.initial, Signal::Constant(&[1.0, 0.0]), 0.0, PI)?;
    let d = (out.circular_mean() - target).rem_euclid(TAU);
    Ok(d.min(TAU - d))
}

/// Grid solver against independent references: rigid rotation, a
/// 4096-particle Kuramoto simulation and direct quadrature of the field.
pub fn oracle() -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let (e128, e256) = (rotation_error(128)?, rotation_error(256)?);
    checks.push(Check::at_most("rotation by pi, circular-mean error G=256", e256, 2e-2));
    checks.push(Check::at_least("rotation error ratio G=128 / G=256", e128 / e256, 1.8));

    let p = build_kuramoto_sync(&Overrides::default())?;
    let stops = [1.0, 2.0, 3.0, 4.0, 5.0];
    let particles = kuramoto_particle_order(quantile_phases(4096, kuramoto_initial_cdf), 1.0, 1e-3, &stops)?;
    let mut rho = p.initial.clone();
    let mut t = 0.0;
    for (&s, rp) in stops.iter().zip(&particles) {
        rho = solve_continuity(&p.system, &rho, Signal::Constant(&[0.0, 1.0]), t, s)?;
        t = s;
        checks.push(Check::at_most(format!("order parameter vs particles t={s}"), (rho.order_parameter() - rp).abs(), 2e-2));
    }

    let fast = kuramoto_velocity(&p.initial, &[0.0, 1.0])?;
    let direct = kuramoto_interaction_direct(&p.initial)?;
    let err = fast
        .component(0)
        .iter()
        .zip(&direct)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    checks.push(Check::at_most("trig-moment field vs direct quadrature", err, 1e-12));
    Ok(checks)
}
