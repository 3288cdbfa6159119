//! Coordinate conventions on the supported state spaces.
//!
//! Periodic coordinates live in the canonical chart `[0, period)`. The nearest
//! lift of a point with respect to a center picks, per periodic coordinate, the
//! representative in the half-open window `(c - period/2, c + period/2]`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative width of the band around `period/2` treated as an exact tie.
/// Grid-cell differences that are mathematically equal to half a period
/// can land a few ulps either side of it.
const TIE_BAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldKind {
    Euclidean(usize),
    Circle,
    Torus2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    kind: ManifoldKind,
    periods: Vec<Option<f64>>,
}

impl ManifoldSpec {
    pub fn euclidean(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("Euclidean dimension must be >= 1".into()));
        }
        Ok(Self {
            kind: ManifoldKind::Euclidean(n),
            periods: vec![None; n],
        })
    }

    pub fn circle() -> Self {
        Self {
            kind: ManifoldKind::Circle,
            periods: vec![Some(TAU)],
        }
    }

    pub fn torus2() -> Self {
        Self {
            kind: ManifoldKind::Torus2,
            periods: vec![Some(TAU); 2],
        }
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.periods.len()
    }

    pub fn periods(&self) -> &[Option<f64>] {
        &self.periods
    }

    pub fn is_periodic(&self) -> bool {
        self.periods.iter().any(Option::is_some)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                x.len()
            )));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate {v}")));
        }
        Ok(())
    }

    /// Maps every periodic coordinate into `[0, period)`.
    pub fn wrap(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(x
            .iter()
            .zip(&self.periods)
            .map(|(&v, p)| match p {
                Some(p) => wrap_scalar(v, *p),
                None => v,
            })
            .collect())
    }

    /// In-place variant of [`wrap`](Self::wrap) used on hot paths.
    pub fn wrap_in_place(&self, x: &mut [f64]) -> Result<()> {
        self.check(x)?;
        for (v, p) in x.iter_mut().zip(&self.periods) {
            if let Some(p) = p {
                *v = wrap_scalar(*v, *p);
            }
        }
        Ok(())
    }

    /// Representative of `y` closest to `center`.
    pub fn nearest_lift(&self, y: &[f64], center: &[f64]) -> Result<Vec<f64>> {
        self.check(y)?;
        self.check(center)?;
        Ok(y.iter()
            .zip(center)
            .zip(&self.periods)
            .map(|((&y, &c), p)| match p {
                Some(p) => c + signed_offset(y - c, *p),
                None => y,
            })
            .collect())
    }
}

/// `v mod period` in `[0, period)`.
#[inline]
pub fn wrap_scalar(v: f64, period: f64) -> f64 {
    let r = v.rem_euclid(period);
    // rem_euclid can round up to exactly `period` for tiny negative inputs.
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Representative of the difference `d` in `(-period/2, period/2]`, with
/// differences within a relative [`TIE_BAND`] of `±period/2` sent to `+period/2`.
#[inline]
pub fn signed_offset(d: f64, period: f64) -> f64 {
    let half = 0.5 * period;
    let r = wrap_scalar(d, period);
    if (r - half).abs() <= TIE_BAND * period {
        half
    } else if r > half {
        r - period
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn wrap_examples() {
        let c = ManifoldSpec::circle();
        assert_abs_diff_eq!(c.wrap(&[7.0]).unwrap()[0], 7.0 - TAU, epsilon = 1e-15);
        assert_eq!(c.wrap(&[0.0]).unwrap(), vec![0.0]);
        let t = ManifoldSpec::torus2();
        let w = t.wrap(&[-0.1, 6.9]).unwrap();
        assert_abs_diff_eq!(w[0], 6.183185, epsilon = 1e-6);
        assert_abs_diff_eq!(w[1], 0.616815, epsilon = 1e-6);
    }

    #[test]
    fn wrap_leaves_euclidean_alone() {
        let e = ManifoldSpec::euclidean(2).unwrap();
        assert_eq!(e.wrap(&[-10.0, 42.5]).unwrap(), vec![-10.0, 42.5]);
    }

    #[test]
    fn wrap_rejects_non_finite() {
        let c = ManifoldSpec::circle();
        assert!(matches!(c.wrap(&[f64::NAN]), Err(Error::Domain(_))));
        assert!(matches!(c.wrap(&[f64::INFINITY]), Err(Error::Domain(_))));
        assert!(matches!(c.wrap(&[1.0, 2.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn euclidean_zero_dim_rejected() {
        assert!(ManifoldSpec::euclidean(0).is_err());
    }

    #[test]
    fn nearest_lift_examples() {
        let c = ManifoldSpec::circle();
        assert_abs_diff_eq!(
            c.nearest_lift(&[6.0], &[0.2]).unwrap()[0],
            -0.283185,
            epsilon = 1e-6
        );
        assert_eq!(c.nearest_lift(&[0.2], &[0.2]).unwrap(), vec![0.2]);
        let t = ManifoldSpec::torus2();
        let l = t.nearest_lift(&[6.0, 1.0], &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(l[0], -0.283185, epsilon = 1e-6);
        assert_eq!(l[1], 1.0);
    }

    #[test]
    fn tie_resolves_upward() {
        let c = ManifoldSpec::circle();
        let l = c.nearest_lift(&[std::f64::consts::PI], &[0.0]).unwrap();
        assert_eq!(l[0], std::f64::consts::PI);
        // Mathematically half a period apart on a 64-cell grid.
        let dx = TAU / 64.0;
        let y = 40.5 * dx;
        let x = 8.5 * dx;
        let l = c.nearest_lift(&[y], &[x]).unwrap();
        assert_abs_diff_eq!(l[0] - x, std::f64::consts::PI, epsilon = 1e-12);
        let l = c.nearest_lift(&[x], &[y]).unwrap();
        assert_abs_diff_eq!(l[0] - y, std::f64::consts::PI, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn wrap_is_idempotent(a in -100.0f64..100.0, b in -100.0f64..100.0) {
            let t = ManifoldSpec::torus2();
            let w = t.wrap(&[a, b]).unwrap();
            prop_assert!(w.iter().all(|v| (0.0..TAU).contains(v)));
            prop_assert_eq!(t.wrap(&w).unwrap(), w);
        }

        #[test]
        fn nearest_lift_is_close_and_equivalent(y in 0.0f64..TAU, c in 0.0f64..TAU) {
            let m = ManifoldSpec::circle();
            let l = m.nearest_lift(&[y], &[c]).unwrap()[0];
            prop_assert!((l - c).abs() <= std::f64::consts::PI + 1e-12);
            let back = m.wrap(&[l]).unwrap()[0];
            let diff = (back - y).abs();
            prop_assert!(diff < 1e-12 || (TAU - diff) < 1e-12);
        }
    }
}
