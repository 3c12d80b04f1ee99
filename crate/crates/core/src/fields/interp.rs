use super::grid::{GridSpec, ScalarField};
use super::spectral::refine;
use crate::error::{Error, Result};

/// Periodic tensor-product Lagrange interpolation of a grid field at
/// arbitrary points, optionally after band-limited refinement of the grid.
///
/// With `order = p` the stencil has `p` points per axis and the error is
/// `O(h^p)` for smooth data.
#[derive(Debug, Clone)]
pub struct Interpolator {
    grid: GridSpec,
    values: Vec<f64>,
    order: usize,
}

impl Interpolator {
    pub fn new(field: &ScalarField, order: usize, refine_factor: usize) -> Result<Self> {
        if order < 2 || order % 2 != 0 || order > 12 {
            return Err(Error::Config(format!(
                "interpolation order {order} must be even and in 2..=12"
            )));
        }
        if refine_factor == 0 {
            return Err(Error::Config("refine factor must be at least 1".into()));
        }
        let fine = refine(field, refine_factor)?;
        if order > fine.grid.points_per_axis() {
            return Err(Error::Config("interpolation stencil wider than the grid".into()));
        }
        Ok(Self {
            grid: fine.grid,
            values: fine.values,
            order,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn axis_stencil(&self, x: f64, idx: &mut [usize], w: &mut [f64]) {
        let n = self.grid.points_per_axis();
        let p = self.order;
        let s = (x + 0.5 * self.grid.box_length()) / self.grid.spacing();
        let base = s.floor();
        let t = s - base;
        let first = base as i64 - (p as i64 / 2 - 1);
        let lo = -(p as f64 / 2.0 - 1.0);
        for j in 0..p {
            idx[j] = (first + j as i64).rem_euclid(n as i64) as usize;
            let oj = lo + j as f64;
            let mut num = 1.0;
            let mut den = 1.0;
            for m in 0..p {
                if m != j {
                    let om = lo + m as f64;
                    num *= t - om;
                    den *= oj - om;
                }
            }
            w[j] = num / den;
        }
    }

    /// Interpolated value at `x` (trailing components ignored below `dim`).
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let p = self.order;
        let n = self.grid.points_per_axis();
        let mut idx = [[0usize; 12]; 3];
        let mut w = [[0.0f64; 12]; 3];
        for a in 0..self.grid.dim() {
            self.axis_stencil(x[a], &mut idx[a][..p], &mut w[a][..p]);
        }
        match self.grid.dim() {
            1 => (0..p).map(|i| w[0][i] * self.values[idx[0][i]]).sum(),
            2 => {
                let mut acc = 0.0;
                for i in 0..p {
                    let row = idx[0][i] * n;
                    let mut inner = 0.0;
                    for j in 0..p {
                        inner += w[1][j] * self.values[row + idx[1][j]];
                    }
                    acc += w[0][i] * inner;
                }
                acc
            }
            _ => {
                let mut acc = 0.0;
                for i in 0..p {
                    let plane = idx[0][i] * n * n;
                    let mut mid = 0.0;
                    for j in 0..p {
                        let row = plane + idx[1][j] * n;
                        let mut inner = 0.0;
                        for k in 0..p {
                            inner += w[2][k] * self.values[row + idx[2][k]];
                        }
                        mid += w[1][j] * inner;
                    }
                    acc += w[0][i] * mid;
                }
                acc
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exact_on_grid_points_and_polynomials() {
        let g = GridSpec::new(3, 16, 2.0).unwrap();
        let f = ScalarField::from_fn(g, |x| (PI * x[0]).sin() + (PI * x[1]).cos() * x[2].cos());
        let it = Interpolator::new(&f, 4, 1).unwrap();
        for flat in [0usize, 5, 777, 4095] {
            let x = g.position(flat);
            assert!((it.eval(x) - f.values[flat]).abs() < 1e-13);
        }
    }

    #[test]
    fn converges_at_stencil_order() {
        let l = 4.0;
        let f = |x: [f64; 3]| (2.0 * PI * x[0] / l).sin() * (2.0 * PI * x[1] / l).cos();
        let probe = [0.123, -0.77, 1.31];
        let mut errs = Vec::new();
        for n in [16usize, 32] {
            let g = GridSpec::new(2, n, l).unwrap();
            let it = Interpolator::new(&ScalarField::from_fn(g, f), 4, 1).unwrap();
            errs.push((it.eval(probe) - f(probe)).abs());
        }
        assert!(errs[0] / errs[1] > 12.0, "{errs:?}");
    }

    #[test]
    fn refinement_makes_band_limited_data_near_exact() {
        let l = 6.0;
        let g = GridSpec::new(3, 24, l).unwrap();
        let k = 2.0 * PI / l;
        let f = move |x: [f64; 3]| {
            ((k * x[0]).sin() + 0.5 * (k * x[1]).cos()).exp() * (k * x[2]).cos()
        };
        let it = Interpolator::new(&ScalarField::from_fn(g, f), 8, 4).unwrap();
        let probe = [0.31, -0.47, 0.05];
        assert!((it.eval(probe) - f(probe)).abs() < 1e-7);
    }

    #[test]
    fn rejects_odd_order() {
        let g = GridSpec::new(1, 16, 1.0).unwrap();
        assert!(Interpolator::new(&ScalarField::zeros(g), 3, 1).is_err());
    }
}
