//! Discrete Fourier transforms on periodic grids and the spectral operators
//! built on them.
//!
//! Convention: the forward transform is unnormalized,
//! `f̂_k = Σ_x f(x) e^{-i k·x}`, and the inverse carries the factor
//! `1 / cells`. With this choice the cell-weighted `L²` norm satisfies
//! `h^d Σ_x |f|² = (h^d / cells) Σ_k |f̂_k|²`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{GridSpec, ScalarField, VectorField, WaveField};
use crate::error::{Error, Result};

/// Cached FFT plans and wavenumber tables for one grid.
pub struct Spectral {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Per-axis wavenumbers in FFT order.
    k: Vec<f64>,
    /// Flat per-axis wavenumbers with the unpaired Nyquist mode zeroed (odd derivatives).
    k_odd: Vec<Vec<f64>>,
    /// Flat dealiasing mask.
    keep: Vec<bool>,
    /// Flat `|k|²`.
    k2: Vec<f64>,
    /// Flat index of `-k`.
    neg: Vec<usize>,
}

type SpectralKey = (usize, usize, u64, u64);

fn cache() -> &'static Mutex<HashMap<SpectralKey, Arc<Spectral>>> {
    static CACHE: OnceLock<Mutex<HashMap<SpectralKey, Arc<Spectral>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Spectral {
    /// Shared context for `grid`; built once per distinct grid.
    pub fn get(grid: &GridSpec) -> Arc<Spectral> {
        let key = (
            grid.dim(),
            grid.points_per_axis(),
            grid.box_length().to_bits(),
            grid.dealias_fraction().to_bits(),
        );
        let mut map = cache().lock().expect("spectral cache poisoned");
        map.entry(key)
            .or_insert_with(|| Arc::new(Spectral::build(*grid)))
            .clone()
    }

    fn build(grid: GridSpec) -> Self {
        let n = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let k: Vec<f64> = (0..n).map(|i| grid.wavenumber(i)).collect();
        let k_odd_axis: Vec<f64> = (0..n)
            .map(|i| if i == n / 2 { 0.0 } else { k[i] })
            .collect();
        let cutoff = grid.dealias_fraction() * (n / 2) as f64;
        let keep_axis: Vec<bool> = (0..n)
            .map(|i| (grid.mode(i).unsigned_abs() as f64) <= cutoff + 1e-12)
            .collect();
        let cells = grid.cells();
        let dim = grid.dim();
        let mut k_odd = vec![vec![0.0; cells]; dim];
        let mut keep = vec![true; cells];
        let mut k2 = vec![0.0; cells];
        let mut neg = vec![0usize; cells];
        for flat in 0..cells {
            let idx = grid.unflatten(flat);
            let mut nidx = [0usize; 3];
            for a in 0..dim {
                k_odd[a][flat] = k_odd_axis[idx[a]];
                keep[flat] &= keep_axis[idx[a]];
                k2[flat] += k[idx[a]] * k[idx[a]];
                nidx[a] = (n - idx[a]) % n;
            }
            neg[flat] = grid.flatten(nidx);
        }
        Self {
            grid,
            forward,
            inverse,
            k,
            k_odd,
            keep,
            k2,
            neg,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Flat table of `|k|²`.
    pub fn k_squared(&self) -> &[f64] {
        &self.k2
    }

    /// Wavenumber along `axis` of flat mode index `flat` (Nyquist zeroed).
    #[inline]
    pub fn k_component(&self, flat: usize, axis: usize) -> f64 {
        self.k_odd[axis][flat]
    }

    /// Per-axis wavenumbers in FFT order.
    pub fn axis_wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Whether flat mode `flat` survives the dealiasing mask.
    #[inline]
    pub fn kept(&self, flat: usize) -> bool {
        self.keep[flat]
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.grid.points_per_axis();
        let dim = self.grid.dim();
        let fft = if inverse { &self.inverse } else { &self.forward };
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // last axis is contiguous
        fft.process_with_scratch(data, &mut scratch);
        if dim > 1 {
            let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
            for axis in 0..dim - 1 {
                let stride = n.pow((dim - 1 - axis) as u32);
                let block = n * stride;
                for chunk in data.chunks_mut(block) {
                    let tmp = &mut buf[..block];
                    // chunk is an n x stride matrix; transpose to stride x n
                    for r in 0..n {
                        let row = &chunk[r * stride..(r + 1) * stride];
                        for (c, v) in row.iter().enumerate() {
                            tmp[c * n + r] = *v;
                        }
                    }
                    fft.process_with_scratch(tmp, &mut scratch);
                    for c in 0..stride {
                        let col = &tmp[c * n..(c + 1) * n];
                        for (r, v) in col.iter().enumerate() {
                            chunk[r * stride + c] = *v;
                        }
                    }
                }
            }
        }
        if inverse {
            let s = 1.0 / data.len() as f64;
            data.iter_mut().for_each(|z| *z *= s);
        }
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    pub fn forward_real(&self, f: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward_in_place(&mut data);
        data
    }

    /// Real part of the inverse transform.
    pub fn inverse_real(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut data = spec.to_vec();
        self.inverse_in_place(&mut data);
        data.into_iter().map(|z| z.re).collect()
    }

    /// Flat index of the mode `-k`.
    #[inline]
    fn negated(&self, flat: usize) -> usize {
        self.neg[flat]
    }

    /// Spectra of two real fields from a single complex transform.
    pub fn forward_real_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut z: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.forward_in_place(&mut z);
        let mut fa = vec![Complex64::new(0.0, 0.0); z.len()];
        let mut fb = vec![Complex64::new(0.0, 0.0); z.len()];
        for i in 0..z.len() {
            let zc = z[self.negated(i)].conj();
            fa[i] = 0.5 * (z[i] + zc);
            fb[i] = Complex64::new(0.0, -0.5) * (z[i] - zc);
        }
        (fa, fb)
    }

    /// Two real fields from Hermitian spectra with a single complex transform.
    pub fn inverse_real_pair(&self, fa: &[Complex64], fb: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut z: Vec<Complex64> = fa.iter().zip(fb).map(|(&x, &y)| x + i * y).collect();
        self.inverse_in_place(&mut z);
        (z.iter().map(|v| v.re).collect(), z.iter().map(|v| v.im).collect())
    }

    /// Inverse-transform a batch of Hermitian spectra, two per complex FFT.
    pub fn inverse_real_many(&self, specs: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(specs.len());
        let mut it = specs.chunks(2);
        for pair in &mut it {
            if pair.len() == 2 {
                let (a, b) = self.inverse_real_pair(&pair[0], &pair[1]);
                out.push(a);
                out.push(b);
            } else {
                out.push(self.inverse_real(&pair[0]));
            }
        }
        out
    }

    /// Forward-transform a batch of real fields, two per complex FFT.
    pub fn forward_real_many(&self, fields: &[&[f64]]) -> Vec<Vec<Complex64>> {
        let mut out = Vec::with_capacity(fields.len());
        for pair in fields.chunks(2) {
            if pair.len() == 2 {
                let (a, b) = self.forward_real_pair(pair[0], pair[1]);
                out.push(a);
                out.push(b);
            } else {
                out.push(self.forward_real(pair[0]));
            }
        }
        out
    }

    /// Zero every mode outside the dealiasing band.
    pub fn apply_mask(&self, spec: &mut [Complex64]) {
        if self.grid.dealias_fraction() >= 1.0 {
            return;
        }
        for (i, z) in spec.iter_mut().enumerate() {
            if !self.kept(i) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// `i k_axis f̂` (masked), the spectrum of `∂_axis f`.
    pub fn derivative_spectrum(&self, spec: &[Complex64], axis: usize, masked: bool) -> Vec<Complex64> {
        let mask = masked && self.grid.dealias_fraction() < 1.0;
        spec.iter()
            .zip(&self.k_odd[axis])
            .zip(&self.keep)
            .map(|((&z, &k), &keep)| {
                if mask && !keep {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(-k * z.im, k * z.re)
                }
            })
            .collect()
    }

    /// `ŝ / |k|²` with the zero mode removed.
    pub fn inverse_laplacian_spectrum(&self, spec: &[Complex64]) -> Vec<Complex64> {
        spec.iter()
            .zip(&self.k2)
            .map(|(&z, &k2)| if k2 > 0.0 { z / k2 } else { Complex64::new(0.0, 0.0) })
            .collect()
    }

    /// Cell-weighted pairing `Σ_{k≠0} w(|k|²) |ŝ_k|² / |k|²`, box-normalized.
    pub fn coulomb_pairing(&self, a: &[Complex64], b: &[Complex64], weight: impl Fn(f64) -> f64) -> f64 {
        let norm = self.grid.cell_volume() / self.grid.cells() as f64;
        let mut acc = 0.0;
        for ((za, zb), &k2) in a.iter().zip(b).zip(&self.k2) {
            if k2 > 0.0 {
                acc += weight(k2) * (za.conj() * zb).re / k2;
            }
        }
        acc * norm
    }
}

/// Forward transform of a real field (unnormalized).
pub fn forward_transform(f: &ScalarField) -> Result<Vec<Complex64>> {
    f.grid.check_len(f.values.len())?;
    Ok(Spectral::get(&f.grid).forward_real(&f.values))
}

/// Forward transform of a wave field (unnormalized).
pub fn forward_transform_wave(f: &WaveField) -> Result<Vec<Complex64>> {
    f.grid.check_len(f.values.len())?;
    let mut data = f.values.clone();
    Spectral::get(&f.grid).forward_in_place(&mut data);
    Ok(data)
}

/// Inverse transform (carries the `1 / cells` factor).
pub fn inverse_transform(grid: &GridSpec, spec: &[Complex64]) -> Result<Vec<Complex64>> {
    grid.check_len(spec.len())?;
    let mut data = spec.to_vec();
    Spectral::get(grid).inverse_in_place(&mut data);
    Ok(data)
}

/// Gradient of the trigonometric interpolant of `f`, dealiased per the grid's
/// `dealias_fraction`.
pub fn spectral_gradient(f: &ScalarField) -> Result<VectorField> {
    f.grid.check_len(f.values.len())?;
    let sp = Spectral::get(&f.grid);
    let fh = sp.forward_real(&f.values);
    let specs: Vec<Vec<Complex64>> = (0..f.grid.dim())
        .map(|a| sp.derivative_spectrum(&fh, a, true))
        .collect();
    let components = sp.inverse_real_many(&specs);
    Ok(VectorField {
        grid: f.grid,
        components,
    })
}

/// Spectral divergence of a vector field (dealiased like [`spectral_gradient`]).
pub fn spectral_divergence(v: &VectorField) -> Result<ScalarField> {
    let sp = Spectral::get(&v.grid);
    let refs: Vec<&[f64]> = v.components.iter().map(|c| c.as_slice()).collect();
    let specs = sp.forward_real_many(&refs);
    let mut acc = vec![Complex64::new(0.0, 0.0); v.grid.cells()];
    for (a, s) in specs.iter().enumerate() {
        for (o, d) in acc.iter_mut().zip(sp.derivative_spectrum(s, a, true)) {
            *o += d;
        }
    }
    Ok(ScalarField {
        grid: v.grid,
        values: sp.inverse_real(&acc),
    })
}

/// Spectral Laplacian (no dealiasing; linear operator).
pub fn spectral_laplacian(f: &ScalarField) -> Result<ScalarField> {
    let sp = Spectral::get(&f.grid);
    let fh = sp.forward_real(&f.values);
    let lap: Vec<Complex64> = fh.iter().zip(sp.k_squared()).map(|(&z, &k2)| -k2 * z).collect();
    Ok(ScalarField {
        grid: f.grid,
        values: sp.inverse_real(&lap),
    })
}

/// Potential `φ = V ⋆ s` of the periodic problem with neutralizing background:
/// `φ̂_k = ŝ_k / |k|²` for `k ≠ 0`, `φ̂_0 = 0`, so `-Δφ = s - mean(s)`.
///
/// In three dimensions this is the Coulomb potential `1/(4π|x|)` convolved
/// with `s`; in one and two dimensions the same multiplier is used and the
/// kernel is the corresponding (non-Coulomb) Green's function.
pub fn poisson_solve(source: &ScalarField) -> Result<ScalarField> {
    source.grid.check_len(source.values.len())?;
    let sp = Spectral::get(&source.grid);
    let sh = sp.forward_real(&source.values);
    Ok(ScalarField {
        grid: source.grid,
        values: sp.inverse_real(&sp.inverse_laplacian_spectrum(&sh)),
    })
}

/// Zero the modes outside the grid's dealiasing band.
pub fn dealias(f: &ScalarField) -> Result<ScalarField> {
    let sp = Spectral::get(&f.grid);
    let mut fh = sp.forward_real(&f.values);
    sp.apply_mask(&mut fh);
    Ok(ScalarField {
        grid: f.grid,
        values: sp.inverse_real(&fh),
    })
}

/// Mean-field force density `∇(V ⋆ ρ)`; the one code path shared by the
/// fluid solver and the particle diagnostics.
pub fn coulomb_field_gradient(rho: &ScalarField) -> Result<VectorField> {
    spectral_gradient(&poisson_solve(rho)?)
}

/// Band-limited interpolation onto a grid with `factor` times more points per
/// axis (zero padding; the unpaired Nyquist mode is split symmetrically).
pub fn refine(f: &ScalarField, factor: usize) -> Result<ScalarField> {
    if factor == 1 {
        return Ok(f.clone());
    }
    let fine_grid = f.grid.resized(f.grid.points_per_axis() * factor)?;
    let coarse = Spectral::get(&f.grid);
    let fine = Spectral::get(&fine_grid);
    let spec = coarse.forward_real(&f.values);
    let n = f.grid.points_per_axis();
    let nf = fine_grid.points_per_axis();
    // per-axis map from coarse index to (fine index, weight)
    let axis_map: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let m = f.grid.mode(i);
            if i == n / 2 {
                vec![(nf - n / 2, 0.5), (n / 2, 0.5)]
            } else if m >= 0 {
                vec![(m as usize, 1.0)]
            } else {
                vec![((nf as i64 + m) as usize, 1.0)]
            }
        })
        .collect();
    let scale = (factor as f64).powi(f.grid.dim() as i32);
    let mut out = vec![Complex64::new(0.0, 0.0); fine_grid.cells()];
    for (flat, &z) in spec.iter().enumerate() {
        let idx = f.grid.unflatten(flat);
        let mut targets: Vec<([usize; 3], f64)> = vec![([0; 3], 1.0)];
        for a in 0..f.grid.dim() {
            let mut next = Vec::with_capacity(targets.len() * 2);
            for (t, w) in &targets {
                for &(fi, fw) in &axis_map[idx[a]] {
                    let mut tt = *t;
                    tt[a] = fi;
                    next.push((tt, w * fw));
                }
            }
            targets = next;
        }
        for (t, w) in targets {
            out[fine_grid.flatten(t)] += z * (w * scale);
        }
    }
    Ok(ScalarField {
        grid: fine_grid,
        values: fine.inverse_real(&out),
    })
}

/// Error unless both operands live on the same grid.
pub fn check_same(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid3(n: usize, l: f64) -> GridSpec {
        GridSpec::new(3, n, l).unwrap()
    }

    #[test]
    fn constant_lands_on_zero_mode() {
        let g = grid3(8, 1.0);
        let f = ScalarField::constant(g, 1.0);
        let spec = forward_transform(&f).unwrap();
        assert!((spec[0].re - g.cells() as f64).abs() < 1e-12);
        for z in &spec[1..] {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_has_one_coefficient() {
        let g = grid3(16, 2.0);
        let k0 = 2.0 * PI * 3.0 / 2.0;
        let f = WaveField::from_fn(g, 1.0, |x| Complex64::from_polar(1.0, k0 * x[1])).unwrap();
        let spec = forward_transform_wave(&f).unwrap();
        let target = g.flatten([0, 3, 0]);
        for (i, z) in spec.iter().enumerate() {
            if i == target {
                assert!((z.norm() - g.cells() as f64).abs() < 1e-9);
            } else {
                assert!(z.norm() < 1e-9, "mode {i} = {z}");
            }
        }
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let g = grid3(8, 1.0);
        let bad = ScalarField {
            grid: g,
            values: vec![0.0; 10],
        };
        assert!(matches!(forward_transform(&bad), Err(Error::SizeMismatch { .. })));
        assert!(inverse_transform(&g, &[Complex64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn gradient_of_sine() {
        let l = 3.0;
        let g = GridSpec::new(2, 16, l).unwrap();
        let f = ScalarField::from_fn(g, |x| (2.0 * PI * x[0] / l).sin());
        let grad = spectral_gradient(&f).unwrap();
        for i in 0..g.cells() {
            let x = g.position(i);
            let exact = 2.0 * PI / l * (2.0 * PI * x[0] / l).cos();
            assert!((grad.components[0][i] - exact).abs() < 1e-10);
            assert!(grad.components[1][i].abs() < 1e-10);
        }
        let c = spectral_gradient(&ScalarField::constant(g, 4.0)).unwrap();
        assert!(c.max_norm() < 1e-12);
    }

    #[test]
    fn gradient_matches_centered_differences_at_second_order() {
        // centered differences of the grid samples are the oracle; their error is O(h²)
        let l = 8.0;
        let bump = |x: [f64; 3]| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp();
        let mut errs = Vec::new();
        for n in [16usize, 32, 64] {
            let g = GridSpec::with_dealias(3, n, l, 1.0).unwrap();
            let f = ScalarField::from_fn(g, bump);
            let grad = spectral_gradient(&f).unwrap();
            let h = g.spacing();
            let mut err: f64 = 0.0;
            for i in 0..g.cells() {
                let mut idx = g.unflatten(i);
                let c = idx[0];
                idx[0] = (c + 1) % n;
                let fp = f.values[g.flatten(idx)];
                idx[0] = (c + n - 1) % n;
                let fm = f.values[g.flatten(idx)];
                err = err.max(((fp - fm) / (2.0 * h) - grad.components[0][i]).abs());
            }
            errs.push(err);
        }
        // ratio ≈ 4 per halving once resolved
        assert!(errs[1] / errs[2] > 3.5, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn poisson_single_mode() {
        let l = 5.0;
        let g = grid3(16, l);
        let s = ScalarField::from_fn(g, |x| (2.0 * PI * x[0] / l).cos());
        let phi = poisson_solve(&s).unwrap();
        let amp = (l / (2.0 * PI)).powi(2);
        for i in 0..g.cells() {
            let x = g.position(i);
            assert!((phi.values[i] - amp * (2.0 * PI * x[0] / l).cos()).abs() < 1e-12);
        }
        let zero = poisson_solve(&ScalarField::constant(g, 3.0)).unwrap();
        assert!(zero.max_abs() < 1e-14);
    }

    #[test]
    fn poisson_inverts_laplacian() {
        let g = grid3(16, 4.0);
        let s = ScalarField::from_fn(g, |x| {
            (-(x[0] * x[0] + 2.0 * x[1] * x[1] + (x[2] - 0.3).powi(2))).exp()
        });
        let mean = s.mean();
        let phi = poisson_solve(&s).unwrap();
        let lap = spectral_laplacian(&phi).unwrap();
        for i in 0..g.cells() {
            assert!((-lap.values[i] - (s.values[i] - mean)).abs() < 1e-10);
        }
        assert!(phi.mean().abs() < 1e-14);
    }

    #[test]
    fn dealias_mask_keeps_two_thirds() {
        let g = GridSpec::new(1, 12, 2.0 * PI).unwrap();
        let sp = Spectral::get(&g);
        let kept: Vec<i64> = (0..12).filter(|&i| sp.kept(i)).map(|i| g.mode(i)).collect();
        assert_eq!(kept, vec![0, 1, 2, 3, 4, -4, -3, -2, -1]);
    }

    #[test]
    fn refine_reproduces_band_limited_function() {
        let l = 2.0 * PI;
        let g = GridSpec::new(2, 16, l).unwrap();
        let f = |x: [f64; 3]| (3.0 * x[0]).sin() + (2.0 * x[1] + x[0]).cos() + (8.0 * x[0]).cos();
        let coarse = ScalarField::from_fn(g, f);
        let fine = refine(&coarse, 4).unwrap();
        for i in 0..fine.grid.cells() {
            let x = fine.grid.position(i);
            // the Nyquist cosine is reproduced exactly by the symmetric split
            assert!((fine.values[i] - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn paired_real_transforms_agree_with_single() {
        let g = grid3(8, 1.0);
        let a: Vec<f64> = (0..g.cells()).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..g.cells()).map(|i| (i as f64 * 0.11).cos() + 0.5).collect();
        let sp = Spectral::get(&g);
        let (fa, fb) = sp.forward_real_pair(&a, &b);
        let sa = sp.forward_real(&a);
        let sb = sp.forward_real(&b);
        for i in 0..g.cells() {
            assert!((fa[i] - sa[i]).norm() < 1e-10);
            assert!((fb[i] - sb[i]).norm() < 1e-10);
        }
        let (ra, rb) = sp.inverse_real_pair(&fa, &fb);
        for i in 0..g.cells() {
            assert!((ra[i] - a[i]).abs() < 1e-12 && (rb[i] - b[i]).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn round_trip_and_parseval(seed in 0u64..1000, dim in 1usize..=3) {
            let g = GridSpec::new(dim, 8, 1.7).unwrap();
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let values: Vec<Complex64> = (0..g.cells()).map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                Complex64::new(a, b)
            }).collect();
            let w = WaveField::new(g, 1.0, values.clone()).unwrap();
            let spec = forward_transform_wave(&w).unwrap();
            let back = inverse_transform(&g, &spec).unwrap();
            let scale = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for (x, y) in values.iter().zip(&back) {
                prop_assert!((x - y).norm() <= 1e-12 * scale);
            }
            let lhs = w.norm_sqr();
            let rhs = spec.iter().map(|z| z.norm_sqr()).sum::<f64>() * g.cell_volume() / g.cells() as f64;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
        }

        #[test]
        fn poisson_output_has_zero_mean(seed in 0u64..1000) {
            let g = GridSpec::new(3, 8, 2.0).unwrap();
            let s = ScalarField::from_fn(g, |x| {
                let t = seed as f64 * 0.01;
                (x[0] * 3.1 + t).sin() * (x[1] - t).cos() + x[2] * x[2] + 1.0
            });
            let phi = poisson_solve(&s).unwrap();
            prop_assert!(phi.mean().abs() < 1e-13);
        }
    }
}
