//! Initial-data profiles: periodized Gaussian densities and smooth phases.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{GridSpec, ScalarField};

/// One-dimensional wrapped normal density with period `l`.
pub fn wrapped_normal(x: f64, center: f64, sigma: f64, l: f64) -> f64 {
    let c = 1.0 / (sigma * (2.0 * PI).sqrt());
    let mut d = x - center;
    d -= l * (d / l).round();
    (-4i32..=4)
        .map(|n| {
            let y = d + n as f64 * l;
            c * (-y * y / (2.0 * sigma * sigma)).exp()
        })
        .sum()
}

/// Product of wrapped normals, normalized on the grid to unit mass.
pub fn periodized_gaussian(grid: GridSpec, center: [f64; 3], sigma: f64) -> Result<ScalarField> {
    if !(sigma > 0.0) {
        return Err(Error::Config(format!("Gaussian width must be positive, got {sigma}")));
    }
    let l = grid.box_length();
    let mut f = ScalarField::from_fn(grid, |x| {
        (0..grid.dim())
            .map(|a| wrapped_normal(x[a], center[a], sigma, l))
            .product()
    });
    f.normalize()?;
    Ok(f)
}

/// Quadratic-times-bump phase `S = (β/2)|r|² exp(−|r|²/(2w²))`, `r` the minimum
/// image of `x`. `β > 0` gives an expanding flow near the origin.
pub fn bump_phase(grid: GridSpec, beta: f64, width: f64) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        let r2: f64 = (0..grid.dim()).map(|a| grid.min_image(x[a]).powi(2)).sum();
        0.5 * beta * r2 * (-r2 / (2.0 * width * width)).exp()
    })
}

/// Gaussian-well phase `S = (βw²/2)(1 − exp(−|r|²/(2w²)))` with velocity
/// `∇S = β r exp(−|r|²/(2w²))`, radially outward everywhere for `β > 0`.
pub fn well_phase(grid: GridSpec, beta: f64, width: f64) -> ScalarField {
    let w2 = width * width;
    ScalarField::from_fn(grid, |x| {
        let r2: f64 = (0..grid.dim()).map(|a| grid.min_image(x[a]).powi(2)).sum();
        0.5 * beta * w2 * (1.0 - (-r2 / (2.0 * w2)).exp())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_is_normalized_and_centered() {
        let g = GridSpec::new(3, 32, 16.0).unwrap();
        let f = periodized_gaussian(g, [1.0, 0.0, -2.0], 1.0).unwrap();
        assert!((f.integral() - 1.0).abs() < 1e-12);
        assert!(f.min() >= 0.0);
        let mx: f64 = (0..g.cells()).map(|i| g.position(i)[0] * f.values[i]).sum::<f64>() * g.cell_volume();
        assert!((mx - 1.0).abs() < 1e-8);
    }

    #[test]
    fn wrapped_normal_is_periodic() {
        let a = wrapped_normal(7.9, 0.0, 1.0, 16.0);
        let b = wrapped_normal(-8.1, 0.0, 1.0, 16.0);
        assert!((a - b).abs() < 1e-18);
    }

    #[test]
    fn phase_is_expanding_near_origin() {
        let g = GridSpec::new(1, 64, 16.0).unwrap();
        let s = bump_phase(g, 0.3, 1.5);
        let i = 33; // x = h > 0
        assert!(s.values[i] > 0.0 && s.values[32] == 0.0);
    }
}
