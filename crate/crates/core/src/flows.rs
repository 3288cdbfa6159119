//! Controlled flows: the abstract `(state space, flow, controls)` interface the
//! descent method runs on, and its finite-dimensional ODE instantiation.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::control::{PiecewiseConstantControl, Signal};
use crate::error::{Error, Result};
use crate::geometry::ManifoldSpec;

/// A control-linear system whose state is carried forward by a flow map and
/// scored by a terminal cost.
///
/// Every call to [`flow`](ControlSystem::flow) counts as one primal solve.
pub trait ControlSystem: Send + Sync {
    type State: Clone + Send + Sync;

    /// Number of control components `m`.
    fn control_dim(&self) -> usize;

    /// Solves the state equation from `state` at `t0` to `t1` under `signal`.
    fn flow(&self, state: &Self::State, signal: Signal<'_>, t0: f64, t1: f64)
        -> Result<Self::State>;

    /// Terminal cost of a state.
    fn cost(&self, state: &Self::State) -> f64;

    /// Total number of flow solves performed so far.
    fn solve_count(&self) -> u64;
}

/// Lock-free counter of flow solves; exact under concurrent increments.
#[derive(Debug, Default)]
pub struct SolveCounter(AtomicU64);

impl SolveCounter {
    pub fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// Basis direction field `f^i(t, x)`.
pub type VectorField = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;
/// Terminal cost `ℓ(x)`.
pub type TerminalCost = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `ẋ = Σ_i u_i(t) f^i_t(x)` on a [`ManifoldSpec`], integrated by fixed-step RK4.
pub struct OdeSystem {
    manifold: ManifoldSpec,
    fields: Vec<VectorField>,
    cost: TerminalCost,
    dt: f64,
    solves: SolveCounter,
}

impl fmt::Debug for OdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeSystem")
            .field("manifold", &self.manifold)
            .field("fields", &self.fields.len())
            .field("dt", &self.dt)
            .field("solves", &self.solves.get())
            .finish()
    }
}

impl OdeSystem {
    pub fn new(
        manifold: ManifoldSpec,
        fields: Vec<VectorField>,
        cost: TerminalCost,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("integrator step must be positive, got {dt}")));
        }
        if fields.is_empty() {
            return Err(Error::Config("at least one basis field is required".into()));
        }
        Ok(Self {
            manifold,
            fields,
            cost,
            dt,
            solves: SolveCounter::default(),
        })
    }

    pub fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn velocity(&self, t: f64, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; x.len()];
        for (ui, f) in u.iter().zip(&self.fields) {
            if *ui == 0.0 {
                continue;
            }
            for (vj, fj) in v.iter_mut().zip(f(t, x)) {
                *vj += ui * fj;
            }
        }
        v
    }

    fn rk4_step(&self, t: f64, x: &[f64], u: &[f64], h: f64) -> Vec<f64> {
        let axpy = |a: f64, k: &[f64]| -> Vec<f64> {
            x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect()
        };
        let k1 = self.velocity(t, x, u);
        let k2 = self.velocity(t + 0.5 * h, &axpy(0.5 * h, &k1), u);
        let k3 = self.velocity(t + 0.5 * h, &axpy(0.5 * h, &k2), u);
        let k4 = self.velocity(t + h, &axpy(h, &k3), u);
        x.iter()
            .enumerate()
            .map(|(j, xj)| xj + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
            .collect()
    }
}

/// Classical RK4 with step `sys.dt`, restarted at every control switch inside
/// `[t0, t1]`; the last step of each constant segment is shortened to land on
/// its end exactly. The result is wrapped onto the manifold's chart.
pub fn integrate_ode(
    sys: &OdeSystem,
    x0: &[f64],
    signal: Signal<'_>,
    t0: f64,
    t1: f64,
) -> Result<Vec<f64>> {
    if t1 < t0 {
        return Err(Error::Domain(format!("backward solve requested: [{t0}, {t1}]")));
    }
    if signal.dim() != sys.fields.len() {
        return Err(Error::Config(format!(
            "control dimension {} does not match {} basis fields",
            signal.dim(),
            sys.fields.len()
        )));
    }
    let mut x = sys.manifold.wrap(x0)?;
    sys.solves.bump();
    if t1 == t0 {
        return Ok(x);
    }
    for (a, b, u) in signal.segments(t0, t1)? {
        let mut k = 0usize;
        loop {
            let t = a + k as f64 * sys.dt;
            if t >= b - 1e-12 * sys.dt {
                break;
            }
            let h = sys.dt.min(b - t);
            x = sys.rk4_step(t, &x, u, h);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Diverged { time: t + h });
            }
            k += 1;
        }
    }
    sys.manifold.wrap_in_place(&mut x)?;
    Ok(x)
}

impl ControlSystem for OdeSystem {
    type State = Vec<f64>;

    fn control_dim(&self) -> usize {
        self.fields.len()
    }

    fn flow(&self, state: &Vec<f64>, signal: Signal<'_>, t0: f64, t1: f64) -> Result<Vec<f64>> {
        integrate_ode(self, state, signal, t0, t1)
    }

    fn cost(&self, state: &Vec<f64>) -> f64 {
        (self.cost)(state)
    }

    fn solve_count(&self) -> u64 {
        self.solves.get()
    }
}

/// The flow `Φ_{s,t}[u]` of a system under a fixed control, exposed as a
/// reusable map. The adjoint state is evaluated as `ℓ ∘ Φ_{t,T}` and never
/// stored.
#[derive(Debug, Clone, Copy)]
pub struct FlowMap<'a, S: ControlSystem> {
    sys: &'a S,
    control: &'a PiecewiseConstantControl,
}

impl<'a, S: ControlSystem> FlowMap<'a, S> {
    pub fn apply(&self, state: &S::State, s: f64, t: f64) -> Result<S::State> {
        self.sys.flow(state, Signal::Piecewise(self.control), s, t)
    }

    /// `p_t(x) = ℓ(Φ_{t,T}(x))`.
    pub fn adjoint(&self, state: &S::State, t: f64) -> Result<f64> {
        let end = self.apply(state, t, self.control.horizon())?;
        Ok(self.sys.cost(&end))
    }
}

pub fn flow_map<'a, S: ControlSystem>(
    sys: &'a S,
    control: &'a PiecewiseConstantControl,
) -> FlowMap<'a, S> {
    FlowMap { sys, control }
}

/// [`flow_map`] specialised to [`OdeSystem`].
pub fn ode_flow_map<'a>(
    sys: &'a OdeSystem,
    control: &'a PiecewiseConstantControl,
) -> FlowMap<'a, OdeSystem> {
    flow_map(sys, control)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControlBox;
    use approx::assert_abs_diff_eq;

    fn field(f: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static) -> VectorField {
        Arc::new(f)
    }

    fn scalar(
        manifold: ManifoldSpec,
        f: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
        cost: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        dt: f64,
    ) -> OdeSystem {
        OdeSystem::new(manifold, vec![field(f)], Arc::new(cost), dt).unwrap()
    }

    fn exp_system(dt: f64) -> OdeSystem {
        scalar(
            ManifoldSpec::euclidean(1).unwrap(),
            |_, x| vec![x[0]],
            |x| x[0],
            dt,
        )
    }

    #[test]
    fn constant_field_on_circle() {
        let sys = scalar(ManifoldSpec::circle(), |_, _| vec![1.0], |_| 0.0, 1e-3);
        let x = integrate_ode(&sys, &[0.0], Signal::Constant(&[1.0]), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exponential_growth() {
        let sys = exp_system(0.01);
        let x = integrate_ode(&sys, &[1.0], Signal::Constant(&[1.0]), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(x[0], std::f64::consts::E, epsilon = 1e-6);
    }

    #[test]
    fn negative_drift() {
        let sys = scalar(
            ManifoldSpec::euclidean(1).unwrap(),
            |_, _| vec![1.0],
            |_| 0.0,
            1e-3,
        );
        let x = integrate_ode(&sys, &[1.0], Signal::Constant(&[-1.0]), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&dt| {
                let x = integrate_ode(&exp_system(dt), &[1.0], Signal::Constant(&[1.0]), 0.0, 1.0)
                    .unwrap();
                (x[0] - std::f64::consts::E).abs()
            })
            .collect();
        assert!(errs[0] / errs[1] >= 12.0, "{errs:?}");
        assert!(errs[1] / errs[2] >= 12.0, "{errs:?}");
    }

    #[test]
    fn zero_duration_is_identity_and_counted() {
        let sys = exp_system(0.01);
        let x = integrate_ode(&sys, &[0.3], Signal::Constant(&[1.0]), 0.4, 0.4).unwrap();
        assert_eq!(x, vec![0.3]);
        assert_eq!(sys.solve_count(), 1);
    }

    #[test]
    fn semigroup_property() {
        let sys = OdeSystem::new(
            ManifoldSpec::euclidean(2).unwrap(),
            vec![
                field(|_, x| vec![x[1].sin(), 0.5 * x[0]]),
                field(|t, x| vec![-x[1], x[0] * (1.0 + 0.1 * t)]),
            ],
            Arc::new(|_| 0.0),
            1e-3,
        )
        .unwrap();
        let u = PiecewiseConstantControl::new(
            2.0,
            vec![vec![1.0, 0.0], vec![-1.0, 1.0], vec![0.0, -1.0], vec![1.0, 1.0]],
            ControlBox::unit(2),
        )
        .unwrap();
        let sig = Signal::Piecewise(&u);
        let x0 = [0.3, -0.7];
        let full = integrate_ode(&sys, &x0, sig, 0.0, 2.0).unwrap();
        let mid = integrate_ode(&sys, &x0, sig, 0.0, 1.0).unwrap();
        let split = integrate_ode(&sys, &mid, sig, 1.0, 2.0).unwrap();
        let err = full
            .iter()
            .zip(&split)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-9, "semigroup defect {err}");
        assert_eq!(sys.solve_count(), 3);
    }

    #[test]
    fn divergence_reports_time() {
        let sys = scalar(
            ManifoldSpec::euclidean(1).unwrap(),
            |_, x| vec![x[0] * x[0]],
            |x| x[0],
            1e-2,
        );
        // Blows up at t = 1 for x0 = 1.
        let err = integrate_ode(&sys, &[1.0], Signal::Constant(&[1.0]), 0.0, 2.0).unwrap_err();
        match err {
            Error::Diverged { time } => assert!(time > 0.9 && time <= 2.0, "{time}"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn rejects_mismatched_control() {
        let sys = exp_system(0.01);
        assert!(integrate_ode(&sys, &[1.0], Signal::Constant(&[1.0, 0.0]), 0.0, 1.0).is_err());
        assert!(integrate_ode(&sys, &[1.0], Signal::Constant(&[1.0]), 1.0, 0.0).is_err());
    }

    #[test]
    fn adjoint_as_cost_composed_with_flow() {
        // Frozen dynamics.
        let sys = scalar(
            ManifoldSpec::euclidean(1).unwrap(),
            |_, x| vec![x[0]],
            |x| x[0] * x[0],
            1e-3,
        );
        let zero = PiecewiseConstantControl::zeros(1.0, 4, 1).unwrap();
        let p = ode_flow_map(&sys, &zero);
        assert_eq!(p.adjoint(&vec![1.5], 0.3).unwrap(), 2.25);

        // Exponential flow: p_t(x) = x e^{T - t}.
        let sys = exp_system(1e-3);
        let one =
            PiecewiseConstantControl::new(1.0, vec![vec![1.0]; 4], ControlBox::unit(1)).unwrap();
        let p = ode_flow_map(&sys, &one);
        for &(x, t) in &[(1.0, 0.0), (0.5, 0.25), (-2.0, 0.75)] {
            let expect = x * (1.0f64 - t).exp();
            assert_abs_diff_eq!(p.adjoint(&vec![x], t).unwrap(), expect, epsilon = 1e-6);
        }
        // Identity at the horizon.
        assert_eq!(p.adjoint(&vec![0.7], 1.0).unwrap(), 0.7);
    }
}
