use std::fmt;
use std::sync::Arc;

use super::grid::{GridDensity, GridSpec};

/// `ℓ(μ) = ⟨μ, F⟩ ≈ Σ F(x_c) ρ_c ΔV`.
pub fn linear_cost(rho: &GridDensity, f: impl Fn(&[f64]) -> f64) -> f64 {
    let grid = rho.grid();
    let dv = grid.cell_volume();
    rho.values()
        .iter()
        .enumerate()
        .map(|(i, r)| f(&grid.center(i)) * r * dv)
        .sum()
}

/// Density mismatch against a target profile. Unweighted: `Σ |ρ - ρ̂|² ΔV`;
/// weighted: `Σ ρ |ρ - ρ̂|² ΔV`.
pub fn matching_cost(rho: &GridDensity, target: impl Fn(&[f64]) -> f64, weighted: bool) -> f64 {
    let grid = rho.grid();
    let sampled: Vec<f64> = (0..grid.len()).map(|i| target(&grid.center(i))).collect();
    matching_cost_sampled(rho, &sampled, weighted)
}

pub(crate) fn matching_cost_sampled(rho: &GridDensity, target: &[f64], weighted: bool) -> f64 {
    let dv = rho.grid().cell_volume();
    rho.values()
        .iter()
        .zip(target)
        .map(|(r, t)| {
            let e = (r - t) * (r - t);
            if weighted {
                r * e * dv
            } else {
                e * dv
            }
        })
        .sum()
}

/// Named scalar observable `F` on the state manifold.
#[derive(Clone)]
pub struct Observable {
    name: String,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl Observable {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Observable").field(&self.name).finish()
    }
}

/// Terminal cost of a mean-field problem, with any target or observable
/// pre-sampled at cell centers.
#[derive(Debug, Clone)]
pub enum CostKind {
    Linear {
        observable: Observable,
        weights: Vec<f64>,
    },
    Matching {
        target: Vec<f64>,
        weighted: bool,
        normalized: bool,
    },
}

impl CostKind {
    pub fn linear(grid: &GridSpec, observable: Observable) -> Self {
        let weights = (0..grid.len()).map(|i| observable.eval(&grid.center(i))).collect();
        CostKind::Linear {
            observable,
            weights,
        }
    }

    /// Samples `target` at cell centers; with `normalize` the samples are
    /// rescaled to unit mass on the grid.
    pub fn matching(grid: &GridSpec, target: impl Fn(&[f64]) -> f64, weighted: bool, normalize: bool) -> Self {
        let mut t: Vec<f64> = (0..grid.len()).map(|i| target(&grid.center(i))).collect();
        if normalize {
            let m = t.iter().sum::<f64>() * grid.cell_volume();
            t.iter_mut().for_each(|v| *v /= m);
        }
        CostKind::Matching {
            target: t,
            weighted,
            normalized: normalize,
        }
    }

    /// Both matching forms `(unweighted, weighted)` against this cost's
    /// target; `None` for linear costs.
    pub fn matching_forms(&self, rho: &GridDensity) -> Option<(f64, f64)> {
        match self {
            CostKind::Matching { target, .. } => Some((
                matching_cost_sampled(rho, target, false),
                matching_cost_sampled(rho, target, true),
            )),
            CostKind::Linear { .. } => None,
        }
    }

    pub fn evaluate(&self, rho: &GridDensity) -> f64 {
        match self {
            CostKind::Linear { weights, .. } => {
                let dv = rho.grid().cell_volume();
                weights.iter().zip(rho.values()).map(|(w, r)| w * r * dv).sum()
            }
            CostKind::Matching { target, weighted, .. } => matching_cost_sampled(rho, target, *weighted),
        }
    }
}
