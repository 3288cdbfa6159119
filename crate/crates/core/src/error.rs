use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of an operation (non-finite coordinate,
    /// time outside the horizon, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or out-of-range configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The state became non-finite during a flow solve.
    #[error("integration diverged at t = {time}")]
    Diverged { time: f64 },

    /// The attention field was evaluated on a density with no mass.
    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    /// An advection step was requested with a time step violating the CFL bound.
    #[error("CFL violated: courant number {courant} exceeds {limit}")]
    Cfl { courant: f64, limit: f64 },
}
