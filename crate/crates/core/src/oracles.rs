//! Reference computations that do not share code with the grid solver, used
//! by the verification suites.

use crate::error::{Error, Result};

/// Deterministic quantile sample of `n` phases from a distribution on
/// `[0, 2π)` given by its CDF: particle `k` sits at `CDF⁻¹((k + ½) / n)`.
pub fn quantile_phases(n: usize, cdf: impl Fn(f64) -> f64) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    (0..n)
        .map(|k| {
            let target = (k as f64 + 0.5) / n as f64;
            let (mut lo, mut hi) = (0.0, tau);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if cdf(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

fn order(phases: &[f64]) -> (f64, f64) {
    let n = phases.len() as f64;
    let (s, c) = phases
        .iter()
        .fold((0.0, 0.0), |(s, c), x| (s + x.sin(), c + x.cos()));
    (s / n, c / n)
}

/// Order parameter `R = |mean e^{i x}|` of a particle ensemble.
pub fn order_parameter(phases: &[f64]) -> f64 {
    let (s, c) = order(phases);
    s.hypot(c)
}

/// Integrates the all-to-all Kuramoto particle system
/// `ẋ_k = coupling · (1/n) Σ_j sin(x_j - x_k)` with RK4 and returns `R` at
/// each requested checkpoint (sorted, non-negative).
pub fn kuramoto_particle_order(
    mut phases: Vec<f64>,
    coupling: f64,
    dt: f64,
    checkpoints: &[f64],
) -> Result<Vec<f64>> {
    if !(dt > 0.0) || checkpoints.windows(2).any(|w| w[1] < w[0]) || checkpoints.iter().any(|&t| t < 0.0) {
        return Err(Error::Config("need dt > 0 and sorted non-negative checkpoints".into()));
    }
    let rhs = |x: &[f64]| -> Vec<f64> {
        let (a, b) = order(x);
        x.iter().map(|xk| coupling * (a * xk.cos() - b * xk.sin())).collect()
    };
    let mut t = 0.0;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &stop in checkpoints {
        while t < stop - 1e-12 {
            let h = dt.min(stop - t);
            let k1 = rhs(&phases);
            let p2: Vec<f64> = phases.iter().zip(&k1).map(|(x, k)| x + 0.5 * h * k).collect();
            let k2 = rhs(&p2);
            let p3: Vec<f64> = phases.iter().zip(&k2).map(|(x, k)| x + 0.5 * h * k).collect();
            let k3 = rhs(&p3);
            let p4: Vec<f64> = phases.iter().zip(&k3).map(|(x, k)| x + h * k).collect();
            let k4 = rhs(&p4);
            for (j, x) in phases.iter_mut().enumerate() {
                *x += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            t += h;
        }
        out.push(order_parameter(&phases));
    }
    Ok(out)
}
