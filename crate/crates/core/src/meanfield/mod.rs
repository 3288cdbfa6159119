//! Mean-field control of the nonlocal continuity equation
//! `∂_t μ + ∇·(f(μ, u) μ) = 0` on periodic grids.

mod advect;
mod cost;
mod fields;
mod grid;

use std::sync::atomic::{AtomicU64, Ordering};

pub use advect::{advect_step, stable_dt};
pub use cost::{linear_cost, matching_cost, CostKind, Observable};
pub use fields::{
    attention_velocity, attention_velocity_direct, kuramoto_interaction_direct, kuramoto_velocity,
    ValueMatrix,
};
pub use grid::{GridDensity, GridSpec, VelocityGrid};

use crate::control::Signal;
use crate::error::{Error, Result};
use crate::flows::{ControlSystem, SolveCounter};
use crate::geometry::ManifoldKind;

/// Which nonlocal field drives the density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKind {
    /// `u₁ · 1 + u₂ ∫ sin(y - x) dμ(y)` on the circle; `m = 2`.
    Kuramoto,
    /// Von Mises attention on the torus with the value matrix as control,
    /// flattened row-major; `m = 4`.
    VonMisesAttention { kappa: f64 },
}

impl FieldKind {
    pub fn control_dim(&self) -> usize {
        match self {
            FieldKind::Kuramoto => 2,
            FieldKind::VonMisesAttention { .. } => 4,
        }
    }
}

/// Solver parameters for the continuity equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub cfl: f64,
    pub dt_max: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            cfl: 0.9,
            dt_max: 1e-2,
        }
    }
}

/// A controlled nonlocal continuity equation with a terminal cost.
#[derive(Debug)]
pub struct MeanFieldSystem {
    grid: GridSpec,
    field: FieldKind,
    cost: CostKind,
    settings: SolverSettings,
    solves: SolveCounter,
    // f64 bits of the largest |mass(out) - mass(in)| seen; non-negative floats
    // order like their bit patterns.
    max_mass_drift: AtomicU64,
}

impl MeanFieldSystem {
    pub fn new(grid: GridSpec, field: FieldKind, cost: CostKind, settings: SolverSettings) -> Result<Self> {
        if !(settings.cfl > 0.0 && settings.cfl < 1.0) {
            return Err(Error::Config(format!("CFL target must lie in (0, 1), got {}", settings.cfl)));
        }
        if !(settings.dt_max > 0.0 && settings.dt_max.is_finite()) {
            return Err(Error::Config(format!("dt_max must be positive, got {}", settings.dt_max)));
        }
        let expected = match field {
            FieldKind::Kuramoto => ManifoldKind::Circle,
            FieldKind::VonMisesAttention { kappa } => {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return Err(Error::Config(format!("concentration must be positive, got {kappa}")));
                }
                ManifoldKind::Torus2
            }
        };
        if grid.manifold().kind() != expected {
            return Err(Error::Config(format!("{field:?} requires a {expected:?} grid")));
        }
        let cells = grid.len();
        let sized = match &cost {
            CostKind::Linear { weights, .. } => weights.len(),
            CostKind::Matching { target, .. } => target.len(),
        };
        if sized != cells {
            return Err(Error::Config("cost samples do not match the grid".into()));
        }
        Ok(Self {
            grid,
            field,
            cost,
            settings,
            solves: SolveCounter::default(),
            max_mass_drift: AtomicU64::new(0),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn field(&self) -> FieldKind {
        self.field
    }

    pub fn cost_kind(&self) -> &CostKind {
        &self.cost
    }

    pub fn settings(&self) -> SolverSettings {
        self.settings
    }

    /// Largest mass drift of any single solve so far.
    pub fn max_mass_drift(&self) -> f64 {
        f64::from_bits(self.max_mass_drift.load(Ordering::Relaxed))
    }

    /// Velocity of the nonlocal field for the current density and control value.
    pub fn velocity(&self, rho: &GridDensity, u: &[f64]) -> Result<VelocityGrid> {
        match self.field {
            FieldKind::Kuramoto => kuramoto_velocity(rho, u),
            FieldKind::VonMisesAttention { kappa } => {
                if u.len() != 4 {
                    return Err(Error::Config(format!("attention control has 4 components, got {}", u.len())));
                }
                attention_velocity(rho, &[[u[0], u[1]], [u[2], u[3]]], kappa)
            }
        }
    }
}

/// Advances `rho` from `t0` to `t1`, refreshing the nonlocal velocity on every
/// substep. Substeps are `min(remaining, stable CFL step, dt_max)`.
pub fn solve_continuity(
    sys: &MeanFieldSystem,
    rho: &GridDensity,
    signal: Signal<'_>,
    t0: f64,
    t1: f64,
) -> Result<GridDensity> {
    if t1 < t0 {
        return Err(Error::Domain(format!("backward solve requested: [{t0}, {t1}]")));
    }
    if signal.dim() != sys.field.control_dim() {
        return Err(Error::Config(format!(
            "control dimension {} does not match the field's {}",
            signal.dim(),
            sys.field.control_dim()
        )));
    }
    if rho.grid() != &sys.grid {
        return Err(Error::Config("density grid does not match the system".into()));
    }
    sys.solves.bump();
    let mass_in = rho.mass();
    let mut cur = rho.clone();
    if t1 > t0 {
        for (a, b, u) in signal.segments(t0, t1)? {
            // Every field is linear in the control: u = 0 freezes the density.
            if u.iter().all(|&v| v == 0.0) {
                continue;
            }
            let mut t = a;
            while t < b {
                let v = sys.velocity(&cur, u)?;
                let remaining = b - t;
                let dt = remaining.min(stable_dt(&v, sys.settings.cfl)).min(sys.settings.dt_max);
                cur = advect_step(&cur, &v, dt, sys.settings.cfl)?;
                if cur.values().iter().any(|r| !r.is_finite()) {
                    return Err(Error::Diverged { time: t + dt });
                }
                t = if dt >= remaining { b } else { t + dt };
            }
        }
    }
    let drift = (cur.mass() - mass_in).abs();
    sys.max_mass_drift.fetch_max(drift.to_bits(), Ordering::Relaxed);
    Ok(cur)
}

impl ControlSystem for MeanFieldSystem {
    type State = GridDensity;

    fn control_dim(&self) -> usize {
        self.field.control_dim()
    }

    fn flow(&self, state: &GridDensity, signal: Signal<'_>, t0: f64, t1: f64) -> Result<GridDensity> {
        solve_continuity(self, state, signal, t0, t1)
    }

    fn cost(&self, state: &GridDensity) -> f64 {
        self.cost.evaluate(state)
    }

    fn solve_count(&self) -> u64 {
        self.solves.get()
    }
}
