use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic box `[-L/2, L/2)^dim` sampled with `n` points per axis.
///
/// Sample `i` on an axis sits at `-L/2 + i h` with `h = L / n`. Wavenumbers
/// are `2π m / L` with `m` in `0..n/2` followed by `-n/2..0` (FFT order).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    points_per_axis: usize,
    box_length: f64,
    dealias_fraction: f64,
}

pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

fn fft_friendly(n: usize) -> bool {
    if n < 8 || n % 2 != 0 {
        return false;
    }
    let mut m = n;
    while m % 2 == 0 {
        m /= 2;
    }
    while m % 3 == 0 {
        m /= 3;
    }
    m == 1
}

impl GridSpec {
    pub fn new(dim: usize, points_per_axis: usize, box_length: f64) -> Result<Self> {
        Self::with_dealias(dim, points_per_axis, box_length, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(
        dim: usize,
        points_per_axis: usize,
        box_length: f64,
        dealias_fraction: f64,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!("dimension {dim} not in 1..=3")));
        }
        if !fft_friendly(points_per_axis) {
            return Err(Error::Config(format!(
                "points_per_axis = {points_per_axis} must be >= 8 and of the form 2^a 3^b (a >= 1)"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::Config(format!("box_length = {box_length} must be positive")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "dealias_fraction = {dealias_fraction} not in (0, 1]"
            )));
        }
        Ok(Self {
            dim,
            points_per_axis,
            box_length,
            dealias_fraction,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Same grid with a different number of points per axis.
    pub fn resized(&self, points_per_axis: usize) -> Result<Self> {
        Self::with_dealias(
            self.dim,
            points_per_axis,
            self.box_length,
            self.dealias_fraction,
        )
    }

    /// Same grid with a different dealiasing fraction (1.0 disables the mask).
    pub fn dealiased(&self, fraction: f64) -> Result<Self> {
        Self::with_dealias(self.dim, self.points_per_axis, self.box_length, fraction)
    }

    pub fn cells(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.spacing()
    }

    /// Signed mode number of FFT index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        let n = self.points_per_axis;
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.mode(i) as f64 / self.box_length
    }

    /// Largest wavenumber kept by the dealiasing mask.
    pub fn dealias_cutoff(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.box_length
            * (self.dealias_fraction * (self.points_per_axis / 2) as f64)
    }

    /// Per-axis indices of a flat (row-major, last axis fastest) index.
    pub fn unflatten(&self, flat: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut idx = [0usize; 3];
        let mut rest = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rest % n;
            rest /= n;
        }
        idx
    }

    pub fn flatten(&self, idx: [usize; 3]) -> usize {
        let n = self.points_per_axis;
        (0..self.dim).fold(0, |acc, axis| acc * n + idx[axis])
    }

    /// Position of a grid point; unused trailing components are zero.
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.coordinate(idx[axis]);
        }
        x
    }

    /// Wrap a coordinate into `[-L/2, L/2)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.box_length;
        let y = (x + 0.5 * l).rem_euclid(l) - 0.5 * l;
        if y >= 0.5 * l {
            y - l
        } else {
            y
        }
    }

    /// Minimum-image representative of a displacement.
    pub fn min_image(&self, d: f64) -> f64 {
        let l = self.box_length;
        d - l * (d / l).round()
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len == self.cells() {
            Ok(())
        } else {
            Err(Error::SizeMismatch {
                expected: self.cells(),
                got: len,
            })
        }
    }
}

/// Real field sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.cells()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.cells()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.cells()).map(|i| f(grid.position(i))).collect();
        Self { grid, values }
    }

    /// Midpoint-rule integral over the box.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Cell-weighted `L²` inner product.
    pub fn dot(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Scale so that the integral is one.
    pub fn normalize(&mut self) -> Result<()> {
        let mass = self.integral();
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Input(format!("cannot normalize field of mass {mass}")));
        }
        self.values.iter_mut().for_each(|v| *v /= mass);
        Ok(())
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ScalarField {
            grid: self.grid,
            values,
        })
    }
}

/// `dim` real component arrays on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    pub grid: GridSpec,
    pub components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: GridSpec, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::Config(format!(
                "{} components for a {}-dimensional grid",
                components.len(),
                grid.dim()
            )));
        }
        for c in &components {
            grid.check_len(c.len())?;
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            components: vec![vec![0.0; grid.cells()]; grid.dim()],
        }
    }

    pub fn constant(grid: GridSpec, c: [f64; 3]) -> Self {
        Self {
            grid,
            components: (0..grid.dim()).map(|a| vec![c[a]; grid.cells()]).collect(),
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut components = vec![vec![0.0; grid.cells()]; grid.dim()];
        for i in 0..grid.cells() {
            let v = f(grid.position(i));
            for (a, c) in components.iter_mut().enumerate() {
                c[i] = v[a];
            }
        }
        Self { grid, components }
    }

    pub fn component(&self, axis: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.components[axis].clone(),
        }
    }

    /// Pointwise `|v|`, maximised over the grid.
    pub fn max_norm(&self) -> f64 {
        (0..self.grid.cells())
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c[i] * c[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn integral(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, c) in self.components.iter().enumerate() {
            out[a] = c.iter().sum::<f64>() * self.grid.cell_volume();
        }
        out
    }
}

/// Complex wave function on a grid, together with the value of ħ it evolves under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveField {
    pub grid: GridSpec,
    pub hbar: f64,
    pub values: Vec<Complex64>,
}

impl WaveField {
    pub fn new(grid: GridSpec, hbar: f64, values: Vec<Complex64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::Config(format!("hbar = {hbar} must be positive")));
        }
        Ok(Self { grid, hbar, values })
    }

    pub fn from_fn(grid: GridSpec, hbar: f64, f: impl Fn([f64; 3]) -> Complex64) -> Result<Self> {
        let values = (0..grid.cells()).map(|i| f(grid.position(i))).collect();
        Self::new(grid, hbar, values)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Input(format!("cannot normalize wave of norm {n}")));
        }
        let s = 1.0 / n.sqrt();
        self.values.iter_mut().for_each(|z| *z *= s);
        Ok(())
    }

    /// `|ψ|²` sampled on the grid.
    pub fn modulus_sqr(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|z| z.norm_sqr()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(GridSpec::new(3, 6, 1.0).is_err());
        assert!(GridSpec::new(3, 10, 1.0).is_err());
        assert!(GridSpec::new(4, 16, 1.0).is_err());
        assert!(GridSpec::new(1, 16, 0.0).is_err());
        assert!(GridSpec::with_dealias(1, 16, 1.0, 0.0).is_err());
        assert!(GridSpec::new(3, 48, 1.0).is_ok());
        assert!(GridSpec::new(2, 64, 1.0).is_ok());
    }

    #[test]
    fn modes_are_symmetric() {
        let g = GridSpec::new(1, 8, 2.0 * std::f64::consts::PI).unwrap();
        let m: Vec<i64> = (0..8).map(|i| g.mode(i)).collect();
        assert_eq!(m, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.wavenumber(3), 3.0);
    }

    #[test]
    fn flat_indexing_round_trips() {
        let g = GridSpec::new(3, 8, 1.0).unwrap();
        for flat in [0, 1, 17, 511, 300] {
            assert_eq!(g.flatten(g.unflatten(flat)), flat);
        }
        assert_eq!(g.position(0), [-0.5, -0.5, -0.5]);
    }

    #[test]
    fn wrap_and_min_image() {
        let g = GridSpec::new(1, 8, 4.0).unwrap();
        assert!((g.wrap(2.5) + 1.5).abs() < 1e-15);
        assert!((g.wrap(-2.0) + 2.0).abs() < 1e-15);
        assert!((g.wrap(2.0) + 2.0).abs() < 1e-15);
        assert!((g.min_image(3.0) + 1.0).abs() < 1e-15);
    }
}
