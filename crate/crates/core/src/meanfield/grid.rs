use std::f64::consts::TAU;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ManifoldKind, ManifoldSpec};

/// Uniform cell-centered grid over the fundamental domain `[0, 2π)^d` of the
/// circle or the 2-torus. Cells are stored row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    manifold: ManifoldSpec,
    cells: Vec<usize>,
}

impl GridSpec {
    pub fn circle(g: usize) -> Result<Self> {
        Self::new(ManifoldSpec::circle(), vec![g])
    }

    pub fn torus(g1: usize, g2: usize) -> Result<Self> {
        Self::new(ManifoldSpec::torus2(), vec![g1, g2])
    }

    pub fn new(manifold: ManifoldSpec, cells: Vec<usize>) -> Result<Self> {
        if matches!(manifold.kind(), ManifoldKind::Euclidean(_)) {
            return Err(Error::Config("density grids need a periodic manifold".into()));
        }
        if cells.len() != manifold.dim() {
            return Err(Error::Config(format!(
                "{} cell counts given for a {}-dimensional manifold",
                cells.len(),
                manifold.dim()
            )));
        }
        if cells.iter().any(|&g| g < 3) {
            return Err(Error::Config("each axis needs at least 3 cells".into()));
        }
        Ok(Self { manifold, cells })
    }

    pub fn manifold(&self) -> &ManifoldSpec {
        &self.manifold
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        TAU / self.cells[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Cell-center coordinates along one axis.
    pub fn axis_centers(&self, axis: usize) -> Vec<f64> {
        let dx = self.spacing(axis);
        (0..self.cells[axis]).map(|i| (i as f64 + 0.5) * dx).collect()
    }

    /// Coordinates of the center of the cell with flat index `idx`.
    pub fn center(&self, idx: usize) -> Vec<f64> {
        match self.cells.as_slice() {
            [_] => vec![(idx as f64 + 0.5) * self.spacing(0)],
            [_, g2] => vec![
                ((idx / g2) as f64 + 0.5) * self.spacing(0),
                ((idx % g2) as f64 + 0.5) * self.spacing(1),
            ],
            _ => unreachable!("grids are 1D or 2D"),
        }
    }

    /// Flat index of the cell containing the point `x` (wrapped first).
    pub fn locate(&self, x: &[f64]) -> Result<usize> {
        let w = self.manifold.wrap(x)?;
        let idx: Vec<usize> = w
            .iter()
            .enumerate()
            .map(|(a, v)| ((v / self.spacing(a)).floor() as usize).min(self.cells[a] - 1))
            .collect();
        Ok(match idx.as_slice() {
            [i] => *i,
            [i, j] => i * self.cells[1] + j,
            _ => unreachable!(),
        })
    }
}

/// Cell-averaged probability density.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: GridSpec,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "{} density values for a grid of {} cells",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite density value".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at cell centers without normalizing.
    pub fn sample(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.center(i))).collect();
        Self::new(grid, values)
    }

    pub fn uniform(grid: GridSpec) -> Self {
        let v = 1.0 / (grid.len() as f64 * grid.cell_volume());
        let n = grid.len();
        Self {
            grid,
            values: vec![v; n],
        }
    }

    /// All mass in the single cell `idx`.
    pub fn point_mass(grid: GridSpec, idx: usize) -> Result<Self> {
        if idx >= grid.len() {
            return Err(Error::Domain(format!("cell {idx} outside the grid")));
        }
        let mut values = vec![0.0; grid.len()];
        values[idx] = 1.0 / grid.cell_volume();
        Ok(Self { grid, values })
    }

    /// Rescales to unit mass.
    pub fn normalized(mut self) -> Result<Self> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(Error::DegenerateDensity("cannot normalize a density with no mass".into()));
        }
        self.values.iter_mut().for_each(|v| *v /= m);
        Ok(self)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// First circular moment `Σ e^{i x_c} ρ_c Δx` along `axis`, as `(re, im)`.
    pub fn first_moment(&self, axis: usize) -> (f64, f64) {
        let dv = self.grid.cell_volume();
        let (mut re, mut im) = (0.0, 0.0);
        for (i, &r) in self.values.iter().enumerate() {
            let x = self.grid.center(i)[axis];
            re += x.cos() * r * dv;
            im += x.sin() * r * dv;
        }
        (re, im)
    }

    /// Kuramoto order parameter `R` (modulus of the first moment) on axis 0.
    pub fn order_parameter(&self) -> f64 {
        let (re, im) = self.first_moment(0);
        re.hypot(im)
    }

    /// Argument of the first moment on axis 0, in `[0, 2π)`.
    pub fn circular_mean(&self) -> f64 {
        let (re, im) = self.first_moment(0);
        crate::geometry::wrap_scalar(im.atan2(re), TAU)
    }

    /// CSV snapshot: `x,rho` in 1D, `x1,x2,rho` in 2D, one row per cell in
    /// row-major order, floats in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        match self.grid.dim() {
            1 => writeln!(w, "x,rho")?,
            _ => writeln!(w, "x1,x2,rho")?,
        }
        for (i, r) in self.values.iter().enumerate() {
            let c = self.grid.center(i);
            for x in &c {
                write!(w, "{x},")?;
            }
            writeln!(w, "{r}")?;
        }
        Ok(())
    }
}

/// Per-cell velocity, one component vector per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    grid: GridSpec,
    components: Vec<Vec<f64>>,
}

impl VelocityGrid {
    pub fn new(grid: GridSpec, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() || components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::Config("velocity layout does not match the grid".into()));
        }
        if components.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite velocity".into()));
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        let components = vec![vec![0.0; grid.len()]; grid.dim()];
        Self { grid, components }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn max_abs(&self, axis: usize) -> f64 {
        self.components[axis].iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
