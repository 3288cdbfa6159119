//! Sample-and-hold monotone descent.
//!
//! For each sampling window `[t, t + h]` the method compares the reference
//! cost `ℓ(Φ̄_{t,T}(x))` with the cost obtained after briefly switching on
//! each direction field, `ℓ(Φ̄_{t,T}(Φ^i_{t,t+ε}(x)))`, holds the sign of the
//! gain as the control on the window and propagates the state with it. The
//! adjoint is never stored: it is always evaluated as cost composed with flow.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{ControlBox, PiecewiseConstantControl, Signal};
use crate::error::{Error, Result};
use crate::flows::ControlSystem;

/// Relative deadband below which a cost gain is treated as zero.
pub const SIGN_DEADBAND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    /// Number of sampling windows `N`.
    pub windows: usize,
    /// Duration of the probing perturbation, in time units.
    pub epsilon: f64,
    /// Outer iterations.
    pub iterations: usize,
    /// Reference control for the first iteration; `None` means `ū ≡ 0`.
    pub initial_control: Option<PiecewiseConstantControl>,
    /// Run the `m` probing rollouts of a window concurrently.
    pub parallel: bool,
}

impl DescentConfig {
    pub fn new(windows: usize, epsilon: f64, iterations: usize) -> Self {
        Self {
            windows,
            epsilon,
            iterations,
            initial_control: None,
            parallel: true,
        }
    }

    pub fn validate(&self, horizon: f64, m: usize) -> Result<()> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        if self.windows == 0 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("N_iter must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= horizon) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, T = {horizon}], got {}",
                self.epsilon
            )));
        }
        if let Some(u) = &self.initial_control {
            if u.dim() != m || (u.horizon() - horizon).abs() > 1e-12 * horizon {
                return Err(Error::Config(
                    "initial control does not match the system's control dimension or horizon".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Primal solve accounting, summed over all iterations.
///
/// Reference and corrected rollouts plus window propagations make up the
/// `(m + 2) N` primal solves per iteration; the `m` short probing flows per
/// window are tallied separately and folded into the corrected solves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveCounts {
    pub reference_solves: u64,
    pub corrected_solves: u64,
    pub propagation_solves: u64,
    pub perturbation_short_solves: u64,
}

impl SolveCounts {
    pub fn primal_total(&self) -> u64 {
        self.reference_solves + self.corrected_solves + self.propagation_solves
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Terminal cost of the initial reference control, then of each iterate.
    pub cost_history: Vec<f64>,
    pub final_control: PiecewiseConstantControl,
    pub switch_count: usize,
    pub component_switch_count: usize,
    pub solve_counts: SolveCounts,
    #[serde(with = "seconds")]
    pub wall_time: Duration,
}

mod seconds {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?))
    }
}

/// A run aborted by a failing flow solve, with everything computed so far.
#[derive(Debug, Clone, thiserror::Error)]
#[error("descent aborted: {error}")]
pub struct DescentFailure {
    pub error: Error,
    pub partial: Box<RunReport>,
}

/// Outcome of probing one sampling window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDecision {
    /// Control held on the window, each component in `{-1, 0, 1}`.
    pub control: Vec<f64>,
    pub reference_cost: f64,
    pub perturbed_costs: Vec<f64>,
}

fn gain_sign(reference: f64, perturbed: f64) -> f64 {
    let gain = reference - perturbed;
    if gain.abs() <= SIGN_DEADBAND * reference.abs().max(1.0) {
        0.0
    } else {
        gain.signum()
    }
}

fn unit(m: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; m];
    e[i] = 1.0;
    e
}

/// Chooses the control on the window starting at `t` from state `x`.
///
/// Performs `1 + 2m` flow solves: the reference rollout, and per direction a
/// probe over `[t, t + min(ε, T - t)]` followed by a rollout of the probed
/// state under `ubar` over `[t, T]`.
pub fn synthesize_window<S: ControlSystem>(
    sys: &S,
    x: &S::State,
    ubar: &PiecewiseConstantControl,
    t: f64,
    epsilon: f64,
    parallel: bool,
) -> Result<WindowDecision> {
    let horizon = ubar.horizon();
    if !(0.0..horizon).contains(&t) {
        return Err(Error::Domain(format!("window start {t} outside [0, {horizon})")));
    }
    let reference = Signal::Piecewise(ubar);
    let reference_cost = sys.cost(&sys.flow(x, reference, t, horizon)?);
    let eps = epsilon.min(horizon - t);
    let m = sys.control_dim();
    let probe = |i: usize| -> Result<f64> {
        let e = unit(m, i);
        let y = sys.flow(x, Signal::Constant(&e), t, t + eps)?;
        Ok(sys.cost(&sys.flow(&y, reference, t, horizon)?))
    };
    let perturbed_costs = if parallel {
        (0..m).into_par_iter().map(probe).collect::<Result<Vec<_>>>()?
    } else {
        (0..m).map(probe).collect::<Result<Vec<_>>>()?
    };
    let control = perturbed_costs
        .iter()
        .map(|&j| gain_sign(reference_cost, j))
        .collect();
    Ok(WindowDecision {
        control,
        reference_cost,
        perturbed_costs,
    })
}

/// Runs the sample-and-hold descent from `x0` over `[0, horizon]`.
pub fn run_descent<S: ControlSystem>(
    sys: &S,
    x0: &S::State,
    horizon: f64,
    cfg: &DescentConfig,
) -> std::result::Result<RunReport, DescentFailure> {
    let start = Instant::now();
    let m = sys.control_dim();
    let n = cfg.windows;
    if let Err(error) = cfg.validate(horizon, m) {
        return Err(DescentFailure {
            error,
            partial: Box::new(empty_report(m)),
        });
    }
    let initial = match &cfg.initial_control {
        Some(u) => u.clone(),
        None => PiecewiseConstantControl::zeros(horizon, n, m).map_err(|error| DescentFailure {
            error,
            partial: Box::new(empty_report(m)),
        })?,
    };
    let mut report = RunReport {
        cost_history: Vec::new(),
        switch_count: initial.switch_count(),
        component_switch_count: initial.component_switch_count(),
        final_control: initial,
        solve_counts: SolveCounts::default(),
        wall_time: Duration::ZERO,
    };

    let fail = |error: Error, mut partial: RunReport| {
        partial.wall_time = start.elapsed();
        DescentFailure {
            error,
            partial: Box::new(partial),
        }
    };

    for _ in 0..cfg.iterations {
        let ubar = report.final_control.clone();
        let mut x = x0.clone();
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            let t = horizon * k as f64 / n as f64;
            let t_next = horizon * (k + 1) as f64 / n as f64;
            let decision = match synthesize_window(sys, &x, &ubar, t, cfg.epsilon, cfg.parallel) {
                Ok(d) => d,
                Err(e) => return Err(fail(e, report)),
            };
            report.solve_counts.reference_solves += 1;
            report.solve_counts.corrected_solves += m as u64;
            report.solve_counts.perturbation_short_solves += m as u64;
            if report.cost_history.is_empty() {
                report.cost_history.push(decision.reference_cost);
            }
            x = match sys.flow(&x, Signal::Constant(&decision.control), t, t_next) {
                Ok(x) => x,
                Err(e) => return Err(fail(e, report)),
            };
            report.solve_counts.propagation_solves += 1;
            values.push(decision.control);
        }
        let u = PiecewiseConstantControl::new(horizon, values, ControlBox::unit(m))
            .expect("sign-law controls lie in the unit box");
        report.cost_history.push(sys.cost(&x));
        report.switch_count = u.switch_count();
        report.component_switch_count = u.component_switch_count();
        report.final_control = u;
    }
    report.wall_time = start.elapsed();
    Ok(report)
}

fn empty_report(m: usize) -> RunReport {
    RunReport {
        cost_history: Vec::new(),
        final_control: PiecewiseConstantControl::zeros(1.0, 1, m.max(1)).expect("valid"),
        switch_count: 0,
        component_switch_count: 0,
        solve_counts: SolveCounts::default(),
        wall_time: Duration::ZERO,
    }
}

/// Both sides of the exact increment formula
/// `ℓ(x_T[u]) - ℓ(x_T[ū]) = ∫ (u_i - ū_i) 𝔄^i p̄_t(x(t)) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
}

/// Evaluates the increment formula between `ubar` and `u` from `x0`.
///
/// The right-hand side is a midpoint rule with `quad_points` nodes along the
/// trajectory `x = x[u]`; the generator action `𝔄^i p̄_t` is a forward
/// difference of `ℓ ∘ Φ̄_{t,T}` along the flow of `f^i` over `eps_fd`.
pub fn verify_increment_formula<S: ControlSystem>(
    sys: &S,
    x0: &S::State,
    ubar: &PiecewiseConstantControl,
    u: &PiecewiseConstantControl,
    quad_points: usize,
    eps_fd: f64,
) -> Result<IncrementCheck> {
    let horizon = ubar.horizon();
    if (u.horizon() - horizon).abs() > 1e-12 * horizon || u.dim() != ubar.dim() {
        return Err(Error::Config("controls must share horizon and dimension".into()));
    }
    if quad_points == 0 || !(eps_fd > 0.0) {
        return Err(Error::Config("need quad_points >= 1 and eps_fd > 0".into()));
    }
    let reference = Signal::Piecewise(ubar);
    let lhs = sys.cost(&sys.flow(x0, Signal::Piecewise(u), 0.0, horizon)?)
        - sys.cost(&sys.flow(x0, reference, 0.0, horizon)?);

    let m = ubar.dim();
    let tau = horizon / quad_points as f64;
    let mut rhs = 0.0;
    let mut x = x0.clone();
    let mut t_prev = 0.0;
    for k in 0..quad_points {
        let t = (k as f64 + 0.5) * tau;
        x = sys.flow(&x, Signal::Piecewise(u), t_prev, t)?;
        t_prev = t;
        let du: Vec<f64> = u.eval(t)?.iter().zip(ubar.eval(t)?).map(|(a, b)| a - b).collect();
        if du.iter().all(|&d| d == 0.0) {
            continue;
        }
        let base = sys.cost(&sys.flow(&x, reference, t, horizon)?);
        for (i, d) in du.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            let e = unit(m, i);
            let y = sys.flow(&x, Signal::Constant(&e), t, t + eps_fd)?;
            let probed = sys.cost(&sys.flow(&y, reference, t, horizon)?);
            rhs += tau * d * (probed - base) / eps_fd;
        }
    }
    Ok(IncrementCheck {
        lhs,
        rhs,
        abs_err: (lhs - rhs).abs(),
    })
}
