//! Nonlocal velocity fields driven by the current density.

use rayon::prelude::*;

use super::grid::{GridDensity, VelocityGrid};
use crate::error::{Error, Result};
use crate::geometry::{signed_offset, ManifoldKind};

/// 2×2 value matrix, row-major.
pub type ValueMatrix = [[f64; 2]; 2];

fn require(rho: &GridDensity, kind: ManifoldKind, what: &str) -> Result<()> {
    if rho.grid().manifold().kind() != kind {
        return Err(Error::Config(format!(
            "{what} needs a {kind:?} grid, got {:?}",
            rho.grid().manifold().kind()
        )));
    }
    Ok(())
}

/// Kuramoto ensemble field `u₁ + u₂ ∫ sin(y - x) ρ(y) dy`.
///
/// The convolution reduces to the trigonometric moments
/// `A = Σ sin(y) ρ Δx`, `B = Σ cos(y) ρ Δx`, giving `u₂ (A cos x - B sin x)`.
pub fn kuramoto_velocity(rho: &GridDensity, u: &[f64]) -> Result<VelocityGrid> {
    require(rho, ManifoldKind::Circle, "the Kuramoto field")?;
    if u.len() != 2 {
        return Err(Error::Config(format!("Kuramoto control has 2 components, got {}", u.len())));
    }
    let grid = rho.grid();
    let dx = grid.spacing(0);
    let xs = grid.axis_centers(0);
    let (mut a, mut b) = (0.0, 0.0);
    for (x, r) in xs.iter().zip(rho.values()) {
        a += x.sin() * r * dx;
        b += x.cos() * r * dx;
    }
    let v = xs
        .iter()
        .map(|x| u[0] + u[1] * (a * x.cos() - b * x.sin()))
        .collect();
    VelocityGrid::new(grid.clone(), vec![v])
}

/// Direct `O(G²)` quadrature of the Kuramoto interaction term
/// `∫ sin(y - x) ρ(y) dy` at every cell center (no control scaling).
pub fn kuramoto_interaction_direct(rho: &GridDensity) -> Result<Vec<f64>> {
    require(rho, ManifoldKind::Circle, "the Kuramoto field")?;
    let dx = rho.grid().spacing(0);
    let xs = rho.grid().axis_centers(0);
    Ok(xs
        .iter()
        .map(|x| {
            xs.iter()
                .zip(rho.values())
                .map(|(y, r)| (y - x).sin() * r * dx)
                .sum()
        })
        .collect())
}

/// Offset of `y` from `x` used inside the attention average: the nearest-lift
/// offset, except that exactly antipodal pairs contribute the mean of their two
/// equidistant lifts (offset zero) so that the field stays reflection
/// symmetric on even grids.
#[inline]
fn attention_offset(d: f64, period: f64) -> f64 {
    let o = signed_offset(d, period);
    if o == 0.5 * period {
        0.0
    } else {
        o
    }
}

fn check_attention(rho: &GridDensity, kappa: f64) -> Result<()> {
    require(rho, ManifoldKind::Torus2, "the attention field")?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::Config(format!("concentration must be positive, got {kappa}")));
    }
    if !(rho.mass() > 0.0) {
        return Err(Error::DegenerateDensity("attention field of a mass-free density".into()));
    }
    Ok(())
}

fn apply_value(grid: &super::grid::GridSpec, v: &ValueMatrix, m1: Vec<f64>, m2: Vec<f64>) -> Result<VelocityGrid> {
    let v1 = m1.iter().zip(&m2).map(|(a, b)| v[0][0] * a + v[0][1] * b).collect();
    let v2 = m1.iter().zip(&m2).map(|(a, b)| v[1][0] * a + v[1][1] * b).collect();
    VelocityGrid::new(grid.clone(), vec![v1, v2])
}

/// Von Mises attention field on the torus:
/// `v(x) = V · E_w[lift(y, x)]` with weights `w(x, y) = exp(κ Σ_j cos(x_j - y_j)) ρ(y)`.
///
/// The kernel factorizes over axes and the lifted offset depends only on the
/// cell-index difference, so all three weighted sums are separable circular
/// convolutions evaluated in `O(G³)`.
pub fn attention_velocity(rho: &GridDensity, v: &ValueMatrix, kappa: f64) -> Result<VelocityGrid> {
    check_attention(rho, kappa)?;
    let grid = rho.grid();
    let (g1, g2) = (grid.cells()[0], grid.cells()[1]);
    let tables = |g: usize, dx: f64| -> (Vec<f64>, Vec<f64>) {
        (0..g)
            .map(|d| {
                let delta = d as f64 * dx;
                ((kappa * delta.cos()).exp(), attention_offset(delta, std::f64::consts::TAU))
            })
            .unzip()
    };
    let (k1, o1) = tables(g1, grid.spacing(0));
    let (k2, o2) = tables(g2, grid.spacing(1));
    let rho = rho.values();

    // Pass along axis 2: s0 = Σ k2 ρ, s1 = Σ k2 o2 ρ, indexed [row y1][column x2].
    let pass2: Vec<(Vec<f64>, Vec<f64>)> = (0..g1)
        .into_par_iter()
        .map(|i| {
            let row = &rho[i * g2..(i + 1) * g2];
            let mut s0 = vec![0.0; g2];
            let mut s1 = vec![0.0; g2];
            for x2 in 0..g2 {
                let (mut a, mut b) = (0.0, 0.0);
                for (y2, r) in row.iter().enumerate() {
                    let d = (y2 + g2 - x2) % g2;
                    a += k2[d] * r;
                    b += k2[d] * o2[d] * r;
                }
                s0[x2] = a;
                s1[x2] = b;
            }
            (s0, s1)
        })
        .collect();

    // Pass along axis 1.
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..g1)
        .into_par_iter()
        .map(|x1| {
            let mut m1 = vec![0.0; g2];
            let mut m2 = vec![0.0; g2];
            let c1 = (x1 as f64 + 0.5) * grid.spacing(0);
            for x2 in 0..g2 {
                let (mut den, mut n1, mut n2) = (0.0, 0.0, 0.0);
                for (y1, (s0, s1)) in pass2.iter().enumerate() {
                    let d = (y1 + g1 - x1) % g1;
                    den += k1[d] * s0[x2];
                    n1 += k1[d] * o1[d] * s0[x2];
                    n2 += k1[d] * s1[x2];
                }
                let c2 = (x2 as f64 + 0.5) * grid.spacing(1);
                m1[x2] = c1 + n1 / den;
                m2[x2] = c2 + n2 / den;
            }
            (m1, m2)
        })
        .collect();
    let (m1, m2): (Vec<Vec<f64>>, Vec<Vec<f64>>) = rows.into_iter().unzip();
    apply_value(grid, v, m1.concat(), m2.concat())
}

/// Direct `O(G⁴)` quadrature of the attention field, lifting every `y` around
/// `x` with [`ManifoldSpec::nearest_lift`](crate::geometry::ManifoldSpec::nearest_lift).
pub fn attention_velocity_direct(
    rho: &GridDensity,
    v: &ValueMatrix,
    kappa: f64,
) -> Result<VelocityGrid> {
    check_attention(rho, kappa)?;
    let grid = rho.grid();
    let manifold = grid.manifold();
    let centers: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.center(i)).collect();
    let dv = grid.cell_volume();
    let means: Vec<Result<(f64, f64)>> = centers
        .par_iter()
        .map(|x| {
            let (mut den, mut n1, mut n2) = (0.0, 0.0, 0.0);
            for (y, r) in centers.iter().zip(rho.values()) {
                if *r == 0.0 {
                    continue;
                }
                let w = (kappa * ((x[0] - y[0]).cos() + (x[1] - y[1]).cos())).exp() * r * dv;
                let mut lift = manifold.nearest_lift(y, x)?;
                for j in 0..2 {
                    if (lift[j] - x[j] - std::f64::consts::PI).abs() <= 1e-9 {
                        lift[j] = x[j];
                    }
                }
                den += w;
                n1 += w * lift[0];
                n2 += w * lift[1];
            }
            Ok((n1 / den, n2 / den))
        })
        .collect();
    let mut m1 = Vec::with_capacity(grid.len());
    let mut m2 = Vec::with_capacity(grid.len());
    for m in means {
        let (a, b) = m?;
        m1.push(a);
        m2.push(b);
    }
    apply_value(grid, v, m1, m2)
}
