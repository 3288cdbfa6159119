//! Piecewise-constant admissible controls on a uniform sampling grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Box constraint `lo_i <= u_i <= hi_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl ControlBox {
    /// The unit box `[-1, 1]^m`.
    pub fn unit(m: usize) -> Self {
        Self {
            lo: vec![-1.0; m],
            hi: vec![1.0; m],
        }
    }

    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Config("control box bounds must be non-empty and equally sized".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::Config("control box requires lo <= hi componentwise".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| l <= v && v <= h)
    }
}

/// A control holding `values[k]` on `[k h, (k+1) h)`, `h = T / N`; the last
/// window is closed at `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantControl {
    horizon: f64,
    values: Vec<Vec<f64>>,
    bounds: ControlBox,
}

impl PiecewiseConstantControl {
    pub fn new(horizon: f64, values: Vec<Vec<f64>>, bounds: ControlBox) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        if values.is_empty() {
            return Err(Error::Config("a control needs at least one window".into()));
        }
        if let Some(k) = values.iter().position(|v| !bounds.contains(v)) {
            return Err(Error::Config(format!(
                "control value {:?} in window {k} is outside the admissible box",
                values[k]
            )));
        }
        Ok(Self {
            horizon,
            values,
            bounds,
        })
    }

    /// `u ≡ 0` on `n` windows within the unit box of dimension `m`.
    pub fn zeros(horizon: f64, n: usize, m: usize) -> Result<Self> {
        Self::new(horizon, vec![vec![0.0; m]; n], ControlBox::unit(m))
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn windows(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &ControlBox {
        &self.bounds
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn window_length(&self) -> f64 {
        self.horizon / self.values.len() as f64
    }

    /// Start time of window `k`.
    pub fn window_start(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.values.len() as f64
    }

    fn window_index(&self, t: f64) -> usize {
        let n = self.values.len();
        ((t * n as f64 / self.horizon).floor() as usize).min(n - 1)
    }

    pub fn eval(&self, t: f64) -> Result<&[f64]> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Domain(format!(
                "t = {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(&self.values[self.window_index(t)])
    }

    /// Number of window boundaries where the value changes in any component.
    pub fn switch_count(&self) -> usize {
        self.values.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Value changes counted per component, summed over components.
    pub fn component_switch_count(&self) -> usize {
        self.values
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).filter(|(a, b)| a != b).count())
            .sum()
    }
}

/// The control input handed to a flow solve.
#[derive(Debug, Clone, Copy)]
pub enum Signal<'a> {
    Piecewise(&'a PiecewiseConstantControl),
    /// A constant value held over the whole solve interval, e.g. the
    /// direction `e^i` while probing a perturbation.
    Constant(&'a [f64]),
}

impl<'a> Signal<'a> {
    pub fn dim(&self) -> usize {
        match self {
            Signal::Piecewise(u) => u.dim(),
            Signal::Constant(v) => v.len(),
        }
    }

    /// Splits `[t0, t1]` into maximal sub-intervals on which the signal is
    /// constant, returning `(start, end, value)` triples in time order.
    pub fn segments(&self, t0: f64, t1: f64) -> Result<Vec<(f64, f64, &'a [f64])>> {
        match *self {
            Signal::Constant(v) => Ok(vec![(t0, t1, v)]),
            Signal::Piecewise(u) => {
                if t0 < 0.0 || t1 > u.horizon * (1.0 + 1e-12) {
                    return Err(Error::Domain(format!(
                        "solve interval [{t0}, {t1}] leaves the control horizon [0, {}]",
                        u.horizon
                    )));
                }
                if t1 <= t0 {
                    return Ok(vec![(t0, t1, u.eval(t0.min(u.horizon))?)]);
                }
                let mut out = Vec::new();
                let mut a = t0;
                let mut k = u.window_index(t0);
                while a < t1 {
                    let end = if k + 1 >= u.windows() {
                        t1
                    } else {
                        u.window_start(k + 1).min(t1)
                    };
                    if end > a {
                        out.push((a, end, u.values[k].as_slice()));
                    }
                    a = end;
                    k += 1;
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_window() -> PiecewiseConstantControl {
        PiecewiseConstantControl::new(1.0, vec![vec![1.0], vec![-1.0]], ControlBox::unit(1)).unwrap()
    }

    #[test]
    fn eval_examples() {
        let u = two_window();
        assert_eq!(u.eval(0.25).unwrap(), &[1.0]);
        assert_eq!(u.eval(1.0).unwrap(), &[-1.0]);
        assert_eq!(u.eval(0.5).unwrap(), &[-1.0]);
    }

    #[test]
    fn eval_outside_horizon_fails() {
        let u = two_window();
        assert!(matches!(u.eval(-0.1), Err(Error::Domain(_))));
        assert!(matches!(u.eval(1.01), Err(Error::Domain(_))));
    }

    #[test]
    fn switch_count_examples() {
        let mk = |v: Vec<Vec<f64>>| {
            let m = v[0].len();
            PiecewiseConstantControl::new(1.0, v, ControlBox::unit(m)).unwrap()
        };
        assert_eq!(mk(vec![vec![1.0, 0.0]; 3]).switch_count(), 0);
        assert_eq!(mk(vec![vec![1.0], vec![-1.0], vec![1.0]]).switch_count(), 2);
        assert_eq!(
            mk(vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![-1.0, 0.0]]).component_switch_count(),
            3
        );
        assert_eq!(
            mk(vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, -1.0]]).switch_count(),
            2
        );
    }

    #[test]
    fn construction_checks() {
        assert!(PiecewiseConstantControl::new(0.0, vec![vec![0.0]], ControlBox::unit(1)).is_err());
        assert!(PiecewiseConstantControl::new(1.0, vec![], ControlBox::unit(1)).is_err());
        assert!(PiecewiseConstantControl::new(1.0, vec![vec![1.5]], ControlBox::unit(1)).is_err());
        assert!(ControlBox::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn segments_follow_window_boundaries() {
        let u = PiecewiseConstantControl::new(
            3.0,
            vec![vec![1.0], vec![0.0], vec![-1.0]],
            ControlBox::unit(1),
        )
        .unwrap();
        let s = Signal::Piecewise(&u).segments(0.5, 3.0).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].0, s[0].1, s[0].2), (0.5, 1.0, &[1.0][..]));
        assert_eq!((s[2].0, s[2].1, s[2].2), (2.0, 3.0, &[-1.0][..]));
        let s = Signal::Piecewise(&u).segments(1.0, 2.0).unwrap();
        assert_eq!(s, vec![(1.0, 2.0, &[0.0][..])]);
    }

    proptest! {
        #[test]
        fn eval_returns_a_stored_value(t in 0.0f64..=2.0, n in 1usize..8) {
            let values: Vec<Vec<f64>> = (0..n).map(|k| vec![k as f64 / n as f64]).collect();
            let u = PiecewiseConstantControl::new(2.0, values.clone(), ControlBox::unit(1)).unwrap();
            let v = u.eval(t).unwrap();
            prop_assert!(values.iter().any(|w| w.as_slice() == v));
        }
    }
}
