//! First-order conservative upwind finite volumes with periodic boundaries.

use super::grid::{GridDensity, VelocityGrid};
use crate::error::{Error, Result};

/// Face velocity between cell `i` and its successor along an axis.
#[inline]
fn face(v: &[f64], i: usize, next: usize) -> f64 {
    0.5 * (v[i] + v[next])
}

/// Iterates `(cell, successor)` flat index pairs along `axis`.
fn neighbours(cells: &[usize], axis: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    let n: usize = cells.iter().product();
    let stride: usize = cells[axis + 1..].iter().product();
    let g = cells[axis];
    (0..n).map(move |i| {
        let k = (i / stride) % g;
        let next = if k + 1 == g { i + stride - g * stride } else { i + stride };
        (i, next)
    })
}

/// Largest step keeping every per-axis Courant number `|v| dt / Δx` and every
/// cell's total outflow fraction at or below `cfl`.
pub fn stable_dt(v: &VelocityGrid, cfl: f64) -> f64 {
    let grid = v.grid();
    let mut rate: f64 = 0.0;
    let mut outflow = vec![0.0; grid.len()];
    for axis in 0..grid.dim() {
        let dx = grid.spacing(axis);
        rate = rate.max(v.max_abs(axis) / dx);
        let c = v.component(axis);
        for (i, next) in neighbours(grid.cells(), axis) {
            let f = face(c, i, next) / dx;
            if f > 0.0 {
                outflow[i] += f;
            } else {
                outflow[next] -= f;
            }
        }
    }
    let rate = outflow.iter().fold(rate, |m, &r| m.max(r));
    if rate == 0.0 {
        f64::INFINITY
    } else {
        cfl / rate
    }
}

/// One explicit upwind step `ρ ← ρ - dt ∇·(v ρ)`.
///
/// Face fluxes take the upwind cell density and the mean of the two adjacent
/// cell velocities; the update telescopes so total mass is preserved to
/// rounding. Fails if `dt · max|v| / Δx` exceeds `cfl` on any axis.
pub fn advect_step(rho: &GridDensity, v: &VelocityGrid, dt: f64, cfl: f64) -> Result<GridDensity> {
    let grid = rho.grid();
    if v.grid() != grid {
        return Err(Error::Config("velocity and density grids differ".into()));
    }
    for axis in 0..grid.dim() {
        let courant = dt * v.max_abs(axis) / grid.spacing(axis);
        if courant > cfl * (1.0 + 1e-12) {
            return Err(Error::Cfl { courant, limit: cfl });
        }
    }
    let old = rho.values();
    let mut out = rho.clone();
    let new = out.values_mut();
    for axis in 0..grid.dim() {
        let lambda = dt / grid.spacing(axis);
        let c = v.component(axis);
        for (i, next) in neighbours(grid.cells(), axis) {
            let f = face(c, i, next);
            let flux = lambda * f * if f > 0.0 { old[i] } else { old[next] };
            new[i] -= flux;
            new[next] += flux;
        }
    }
    Ok(out)
}
