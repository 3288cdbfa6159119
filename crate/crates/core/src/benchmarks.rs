//! Canonical problems: the Kuramoto synchronization and density-matching
//! problems on the circle, von Mises attention aggregation on the torus, and
//! three small ODE problems with hand-checkable solutions.
//!
//! All default parameters live here; callers only pass overrides.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::descent::DescentConfig;
use crate::error::{Error, Result};
use crate::flows::{ControlSystem, OdeSystem, VectorField};
use crate::geometry::ManifoldSpec;
use crate::meanfield::{
    CostKind, FieldKind, GridDensity, GridSpec, MeanFieldSystem, Observable, SolverSettings,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    KuramotoSync,
    KuramotoMatching,
    AttentionTorus,
    Drift1d,
    Bilinear1d,
    Reach2d,
}

impl Benchmark {
    pub const ALL: [Benchmark; 6] = [
        Benchmark::KuramotoSync,
        Benchmark::KuramotoMatching,
        Benchmark::AttentionTorus,
        Benchmark::Drift1d,
        Benchmark::Bilinear1d,
        Benchmark::Reach2d,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::KuramotoSync => "kuramoto_sync",
            Benchmark::KuramotoMatching => "kuramoto_matching",
            Benchmark::AttentionTorus => "attention_torus",
            Benchmark::Drift1d => "drift1d",
            Benchmark::Bilinear1d => "bilinear1d",
            Benchmark::Reach2d => "reach2d",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Benchmark::KuramotoSync => "Kuramoto ensemble on S^1, concentrate phases at pi",
            Benchmark::KuramotoMatching => "Kuramoto ensemble on S^1, match a Gaussian profile at pi",
            Benchmark::AttentionTorus => "von Mises attention on T^2, aggregate at (0,0) via the value matrix",
            Benchmark::Drift1d => "x' = u on R, x0 = 1, cost x^2",
            Benchmark::Bilinear1d => "x' = u x on R, x0 = 1, cost x",
            Benchmark::Reach2d => "x' = u on R^2, x0 = (1,1), cost |x - (-0.5, 0.5)|^2",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown benchmark '{name}'")))
    }

    pub fn is_mean_field(&self) -> bool {
        matches!(
            self,
            Benchmark::KuramotoSync | Benchmark::KuramotoMatching | Benchmark::AttentionTorus
        )
    }
}

/// Optional parameter overrides; `None` keeps the benchmark default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub horizon: Option<f64>,
    pub windows: Option<usize>,
    pub epsilon: Option<f64>,
    pub iterations: Option<usize>,
    pub kappa: Option<f64>,
    pub weighted: Option<bool>,
    pub normalize_target: Option<bool>,
    pub cfl: Option<f64>,
    pub dt_max: Option<f64>,
    pub ode_dt: Option<f64>,
}

impl Overrides {
    fn reject(&self, what: &str, present: bool, bench: &str) -> Result<()> {
        if present {
            return Err(Error::Config(format!("'{what}' does not apply to benchmark '{bench}'")));
        }
        Ok(())
    }

    fn mean_field_only(&self, bench: &str) -> Result<()> {
        self.reject("system.dt", self.ode_dt.is_some(), bench)
    }

    fn ode_only(&self, bench: &str) -> Result<()> {
        self.reject("grid.G", self.grid.is_some(), bench)?;
        self.reject("system.kappa", self.kappa.is_some(), bench)?;
        self.reject("system.cfl", self.cfl.is_some(), bench)?;
        self.reject("system.dt_max", self.dt_max.is_some(), bench)?;
        self.no_matching(bench)
    }

    fn no_matching(&self, bench: &str) -> Result<()> {
        self.reject("cost.weighted", self.weighted.is_some(), bench)?;
        self.reject("cost.normalize_target", self.normalize_target.is_some(), bench)
    }

    fn settings(&self) -> SolverSettings {
        let d = SolverSettings::default();
        SolverSettings {
            cfl: self.cfl.unwrap_or(d.cfl),
            dt_max: self.dt_max.unwrap_or(d.dt_max),
        }
    }

    fn descent(&self, windows: usize, epsilon: f64, iterations: usize) -> DescentConfig {
        DescentConfig::new(
            self.windows.unwrap_or(windows),
            self.epsilon.unwrap_or(epsilon),
            self.iterations.unwrap_or(iterations),
        )
    }
}

/// A ready-to-run problem instance.
#[derive(Debug)]
pub struct Problem<S: ControlSystem> {
    pub system: S,
    pub initial: S::State,
    pub horizon: f64,
    pub descent: DescentConfig,
}

#[derive(Debug)]
pub enum BuiltProblem {
    MeanField(Problem<MeanFieldSystem>),
    Ode(Problem<OdeSystem>),
}

pub fn build(bench: Benchmark, o: &Overrides) -> Result<BuiltProblem> {
    Ok(match bench {
        Benchmark::KuramotoSync => BuiltProblem::MeanField(build_kuramoto_sync(o)?),
        Benchmark::KuramotoMatching => BuiltProblem::MeanField(build_kuramoto_matching(o)?),
        Benchmark::AttentionTorus => BuiltProblem::MeanField(build_attention_torus(o)?),
        other => BuiltProblem::Ode(build_toy_ode(other.name(), o)?),
    })
}

/// Initial phase density of the Kuramoto problems.
pub fn kuramoto_initial_density(x: f64) -> f64 {
    (2.0 + x.sin() + 0.8 * (2.0 * x).cos() - 0.2 * (2.0 * x).sin()) / (4.0 * PI)
}

/// Cumulative distribution of [`kuramoto_initial_density`] on `[0, 2π]`.
pub fn kuramoto_initial_cdf(x: f64) -> f64 {
    (2.0 * x + (1.0 - x.cos()) + 0.4 * (2.0 * x).sin() - 0.1 * (1.0 - (2.0 * x).cos())) / (4.0 * PI)
}

/// Target profile of the matching problem (not normalized).
pub fn matching_target(x: f64) -> f64 {
    (-0.5 * (x - PI).powi(2)).exp()
}

/// `F(x) = 1 - cos(x - π)`, minimal at the synchronization point `π`.
pub fn antiphase_observable() -> Observable {
    Observable::new("1 - cos(x - pi)", |x| 1.0 - (x[0] - PI).cos())
}

/// `F(x) = 2 - cos x₁ - cos x₂`, minimal at the corner `(0, 0)` of the torus.
pub fn corner_observable() -> Observable {
    Observable::new("2 - cos x1 - cos x2", |x| 2.0 - x[0].cos() - x[1].cos())
}

pub const ATTENTION_BUMP_CENTERS: [[f64; 2]; 3] = [[2.0, 2.0], [4.0, 5.0], [5.5, 1.0]];
pub const ATTENTION_BUMP_KAPPA: f64 = 8.0;

fn kuramoto_grid_and_density(o: &Overrides) -> Result<(GridSpec, GridDensity)> {
    let grid = GridSpec::circle(o.grid.unwrap_or(256))?;
    let rho = GridDensity::sample(grid.clone(), |x| kuramoto_initial_density(x[0]))?.normalized()?;
    Ok((grid, rho))
}

fn kuramoto_horizon(o: &Overrides) -> f64 {
    o.horizon.unwrap_or(5.0)
}

pub fn build_kuramoto_sync(o: &Overrides) -> Result<Problem<MeanFieldSystem>> {
    let name = Benchmark::KuramotoSync.name();
    o.mean_field_only(name)?;
    o.no_matching(name)?;
    o.reject("system.kappa", o.kappa.is_some(), name)?;
    let (grid, initial) = kuramoto_grid_and_density(o)?;
    let cost = CostKind::linear(&grid, antiphase_observable());
    Ok(Problem {
        system: MeanFieldSystem::new(grid, FieldKind::Kuramoto, cost, o.settings())?,
        initial,
        horizon: kuramoto_horizon(o),
        descent: o.descent(3, 0.1, 1),
    })
}

pub fn build_kuramoto_matching(o: &Overrides) -> Result<Problem<MeanFieldSystem>> {
    let name = Benchmark::KuramotoMatching.name();
    o.mean_field_only(name)?;
    o.reject("system.kappa", o.kappa.is_some(), name)?;
    let (grid, initial) = kuramoto_grid_and_density(o)?;
    let cost = CostKind::matching(
        &grid,
        |x| matching_target(x[0]),
        o.weighted.unwrap_or(false),
        o.normalize_target.unwrap_or(false),
    );
    Ok(Problem {
        system: MeanFieldSystem::new(grid, FieldKind::Kuramoto, cost, o.settings())?,
        initial,
        horizon: kuramoto_horizon(o),
        descent: o.descent(3, 0.1, 1),
    })
}

/// Sum of equal-weight von Mises bumps, normalized on the grid.
pub fn attention_initial_density(grid: GridSpec) -> Result<GridDensity> {
    GridDensity::sample(grid, |x| {
        ATTENTION_BUMP_CENTERS
            .iter()
            .map(|c| (ATTENTION_BUMP_KAPPA * ((x[0] - c[0]).cos() + (x[1] - c[1]).cos() - 2.0)).exp())
            .sum()
    })?
    .normalized()
}

pub fn build_attention_torus(o: &Overrides) -> Result<Problem<MeanFieldSystem>> {
    let name = Benchmark::AttentionTorus.name();
    o.mean_field_only(name)?;
    o.no_matching(name)?;
    let g = o.grid.unwrap_or(64);
    let grid = GridSpec::torus(g, g)?;
    let initial = attention_initial_density(grid.clone())?;
    let cost = CostKind::linear(&grid, corner_observable());
    let field = FieldKind::VonMisesAttention {
        kappa: o.kappa.unwrap_or(5.0),
    };
    Ok(Problem {
        system: MeanFieldSystem::new(grid, field, cost, o.settings())?,
        initial,
        horizon: o.horizon.unwrap_or(0.5),
        descent: o.descent(4, 0.1, 1),
    })
}

fn field(f: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static) -> VectorField {
    Arc::new(f)
}

/// Toy ODE problems: `drift1d`, `bilinear1d`, `reach2d`.
pub fn build_toy_ode(name: &str, o: &Overrides) -> Result<Problem<OdeSystem>> {
    o.ode_only(name)?;
    let (manifold, fields, cost, x0, horizon, windows): (_, Vec<VectorField>, crate::flows::TerminalCost, _, _, _) =
        match name {
            "drift1d" => (
                ManifoldSpec::euclidean(1)?,
                vec![field(|_, _| vec![1.0])],
                Arc::new(|x: &[f64]| x[0] * x[0]),
                vec![1.0],
                1.0,
                1,
            ),
            "bilinear1d" => (
                ManifoldSpec::euclidean(1)?,
                vec![field(|_, x| vec![x[0]])],
                Arc::new(|x: &[f64]| x[0]),
                vec![1.0],
                1.0,
                1,
            ),
            "reach2d" => (
                ManifoldSpec::euclidean(2)?,
                vec![field(|_, _| vec![1.0, 0.0]), field(|_, _| vec![0.0, 1.0])],
                Arc::new(|x: &[f64]| (x[0] + 0.5).powi(2) + (x[1] - 0.5).powi(2)),
                vec![1.0, 1.0],
                2.0,
                4,
            ),
            other => return Err(Error::Config(format!("unknown toy problem '{other}'"))),
        };
    let horizon = o.horizon.unwrap_or(horizon);
    let dt = o.ode_dt.unwrap_or(1e-3 * horizon);
    Ok(Problem {
        system: OdeSystem::new(manifold, fields, cost, dt)?,
        initial: x0,
        horizon,
        descent: o.descent(windows, 0.1, 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ControlBox, PiecewiseConstantControl, Signal};
    use crate::descent::run_descent;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    #[test]
    fn registry_names_round_trip() {
        for b in Benchmark::ALL {
            assert_eq!(Benchmark::from_name(b.name()).unwrap(), b);
        }
        assert!(Benchmark::from_name("nope").is_err());
    }

    #[test]
    fn kuramoto_sync_construction() {
        let p = build_kuramoto_sync(&Overrides::default()).unwrap();
        assert_abs_diff_eq!(p.initial.mass(), 1.0, epsilon = 1e-12);
        let raw = GridDensity::sample(p.initial.grid().clone(), |x| kuramoto_initial_density(x[0])).unwrap();
        assert!((raw.mass() - 1.0).abs() <= 1e-6);
        assert_abs_diff_eq!(p.system.cost(&p.initial), 1.0, epsilon = 1e-4);
        assert_eq!(p.system.control_dim(), 2);
        assert_eq!((p.descent.windows, p.descent.epsilon, p.descent.iterations), (3, 0.1, 1));
        assert_eq!(p.horizon, 5.0);
    }

    #[test]
    fn kuramoto_matching_cost_positive_both_forms() {
        for weighted in [false, true] {
            let o = Overrides {
                weighted: Some(weighted),
                ..Default::default()
            };
            let p = build_kuramoto_matching(&o).unwrap();
            assert!(p.system.cost(&p.initial) > 0.0);
        }
    }

    #[test]
    fn attention_construction() {
        let p = build_attention_torus(&Overrides::default()).unwrap();
        assert_abs_diff_eq!(p.initial.mass(), 1.0, epsilon = 1e-12);
        assert!(p.initial.min() >= 0.0);
        let f = corner_observable();
        assert_eq!(f.eval(&[0.0, 0.0]), 0.0);
        assert_eq!(f.eval(&[PI, PI]), 4.0);
        assert_eq!(p.system.control_dim(), 4);
        assert_eq!((p.descent.windows, p.horizon), (4, 0.5));
    }

    #[test]
    fn zero_control_freezes_every_mean_field_benchmark() {
        for b in [Benchmark::KuramotoSync, Benchmark::KuramotoMatching, Benchmark::AttentionTorus] {
            let o = Overrides {
                grid: Some(if b == Benchmark::AttentionTorus { 16 } else { 64 }),
                ..Default::default()
            };
            let BuiltProblem::MeanField(p) = build(b, &o).unwrap() else { unreachable!() };
            let zero = PiecewiseConstantControl::zeros(p.horizon, 3, p.system.control_dim()).unwrap();
            let out = p.system.flow(&p.initial, Signal::Piecewise(&zero), 0.0, p.horizon).unwrap();
            assert_eq!(out, p.initial);
        }
    }

    #[test]
    fn toy_problems() {
        let p = build_toy_ode("bilinear1d", &Overrides::default()).unwrap();
        let down = PiecewiseConstantControl::new(1.0, vec![vec![-1.0]], ControlBox::unit(1)).unwrap();
        let x = p.system.flow(&p.initial, Signal::Piecewise(&down), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(p.system.cost(&x), (-1.0f64).exp(), epsilon = 1e-9);

        let p = build_toy_ode("drift1d", &Overrides::default()).unwrap();
        let r = run_descent(&p.system, &p.initial, p.horizon, &p.descent).unwrap();
        assert_abs_diff_eq!(*r.cost_history.last().unwrap(), 0.0, epsilon = 1e-12);

        assert!(build_toy_ode("pendulum", &Overrides::default()).is_err());
    }

    #[test]
    fn reach2d_hand_simulation() {
        // Window by window from (1,1): (-1,-1), (-1,-1), (-1,+1), (-1,-1),
        // ending at (-1, 0), a quarter off in each coordinate.
        let p = build_toy_ode("reach2d", &Overrides::default()).unwrap();
        let r = run_descent(&p.system, &p.initial, p.horizon, &p.descent).unwrap();
        assert_eq!(
            r.final_control.values(),
            &[vec![-1.0, -1.0], vec![-1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]
        );
        assert_abs_diff_eq!(r.cost_history[0], 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.cost_history[1], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn overrides_are_checked_against_the_benchmark() {
        let o = Overrides {
            grid: Some(32),
            ..Default::default()
        };
        assert!(build_toy_ode("drift1d", &o).is_err());
        let o = Overrides {
            kappa: Some(2.0),
            ..Default::default()
        };
        assert!(build_kuramoto_sync(&o).is_err());
        let o = Overrides {
            weighted: Some(true),
            ..Default::default()
        };
        assert!(build_attention_torus(&o).is_err());
        let o = Overrides {
            cfl: Some(1.5),
            ..Default::default()
        };
        assert!(build_kuramoto_sync(&o).is_err());
    }

    #[test]
    fn cdf_matches_density() {
        assert_abs_diff_eq!(kuramoto_initial_cdf(0.0), 0.0);
        assert_abs_diff_eq!(kuramoto_initial_cdf(TAU), 1.0, epsilon = 1e-14);
        let h = 1e-6;
        for x in [0.3, 1.7, 4.0, 6.0] {
            let d = (kuramoto_initial_cdf(x + h) - kuramoto_initial_cdf(x - h)) / (2.0 * h);
            assert_abs_diff_eq!(d, kuramoto_initial_density(x), epsilon = 1e-8);
        }
    }
}
