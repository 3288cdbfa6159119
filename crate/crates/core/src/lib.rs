//! Sample-and-hold monotone descent for control-linear optimal control.
//!
//! The solver works on any [`ControlSystem`]: a flow map, a terminal cost and
//! a control dimension. Two instantiations ship with the crate: fixed-step RK4
//! for ODEs on Euclidean spaces, the circle and the 2-torus
//! ([`flows::OdeSystem`]), and an upwind finite-volume solver for nonlocal
//! continuity equations ([`meanfield::MeanFieldSystem`]).

pub mod benchmarks;
pub mod control;
pub mod descent;
pub mod error;
pub mod flows;
pub mod geometry;
pub mod meanfield;
pub mod oracles;

pub use control::{ControlBox, PiecewiseConstantControl, Signal};
pub use descent::{
    run_descent, synthesize_window, verify_increment_formula, DescentConfig, DescentFailure,
    IncrementCheck, RunReport, SolveCounts, WindowDecision,
};
pub use error::{Error, Result};
pub use flows::{flow_map, integrate_ode, ode_flow_map, ControlSystem, FlowMap, OdeSystem};
pub use geometry::{ManifoldKind, ManifoldSpec};
pub use meanfield::{solve_continuity, GridDensity, GridSpec, MeanFieldSystem, VelocityGrid};
