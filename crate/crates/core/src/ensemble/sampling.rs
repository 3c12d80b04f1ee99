//! Initial particle configurations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fields::{refine, Interpolator, ScalarField, VectorField};

/// `n` iid points from the periodized normal law `N(center, σ²I)` wrapped
/// into `[-L/2, L/2)³`. Exact, so useful as an oracle sampler.
pub fn sample_wrapped_gaussian(n: usize, center: [f64; 3], sigma: f64, box_length: f64, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = box_length;
    (0..n)
        .map(|_| {
            let mut p = [0.0; 3];
            for a in 0..3 {
                let z: f64 = rng.sample(StandardNormal);
                let y = (center[a] + sigma * z + 0.5 * l).rem_euclid(l) - 0.5 * l;
                p[a] = if y >= 0.5 * l { y - l } else { y };
            }
            p
        })
        .collect()
}

/// `n` iid points from a grid density by inverse CDF.
///
/// The density is first refined spectrally by `refine_factor`, clipped at
/// zero, and read as constant on the cell around each node. Sampling the
/// flat lexicographic CDF is the chain of conditional laws axis by axis.
/// Trailing coordinates of lower-dimensional grids are zero.
pub fn sample_density(rho: &ScalarField, n: usize, refine_factor: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    let fine = refine(rho, refine_factor)?;
    let mut cdf = Vec::with_capacity(fine.values.len());
    let mut acc = 0.0;
    for &v in &fine.values {
        if !v.is_finite() {
            return Err(Error::Input("density has non-finite values".into()));
        }
        acc += v.max(0.0);
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::Input("density has no positive mass".into()));
    }
    let grid = fine.grid;
    let h = grid.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let target = rng.gen::<f64>() * acc;
            let cell = cdf.partition_point(|&c| c <= target).min(cdf.len() - 1);
            let mut p = grid.position(cell);
            for a in 0..grid.dim() {
                p[a] = grid.wrap(p[a] + h * (rng.gen::<f64>() - 0.5));
            }
            p
        })
        .collect())
}

/// Monokinetic velocities `v_j = u(x_j)` by local interpolation.
pub fn velocities_from_field(u: &VectorField, positions: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    let interps = u
        .components
        .iter()
        .map(|c| {
            Interpolator::new(
                &ScalarField {
                    grid: u.grid,
                    values: c.clone(),
                },
                8,
                2,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(positions
        .iter()
        .map(|x| {
            let mut v = [0.0; 3];
            for (a, it) in interps.iter().enumerate() {
                v[a] = it.eval(*x);
            }
            v
        })
        .collect())
}

/// Cell centers of a cubic lattice with `per_axis³` sites in `[-L/2, L/2)³`.
pub fn lattice_positions(per_axis: usize, box_length: f64) -> Vec<[f64; 3]> {
    let h = box_length / per_axis as f64;
    let c = |i: usize| -0.5 * box_length + (i as f64 + 0.5) * h;
    let mut out = Vec::with_capacity(per_axis.pow(3));
    for i in 0..per_axis {
        for j in 0..per_axis {
            for k in 0..per_axis {
                out.push([c(i), c(j), c(k)]);
            }
        }
    }
    out
}
