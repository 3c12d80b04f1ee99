//! Wigner and Husimi transforms of one-dimensional wave functions.
//!
//! On the torus the shift variable `s = ħy/2` is periodic with period `L`,
//! which forces the momentum spacing `Δξ = πħ/L`. The wave function is
//! refined to half the grid spacing so that the window `|ξ| ≤ πħn/L`
//! covers every momentum the grid can carry. As with any discrete Wigner
//! function on a ring, a localized packet has an oscillating (`(−1)^j` in
//! `ξ`) ghost half a box away; it carries no mass and the Husimi smoothing
//! removes it, but it doubles the purity: `∬W² = ‖ψ‖⁴/(πħ)` here.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::FluidState;
use crate::fields::{refine, GridSpec, ScalarField, Spectral, WaveField};
use crate::hartree::kinetic_energy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSpaceKind {
    Wigner,
    Husimi,
}

/// Phase-space density sampled at `(x_i, ξ_j)`, `ξ_j = (j − J)Δξ` with
/// `J = xi_points/2`, stored row-major with `ξ` fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceField {
    pub kind: PhaseSpaceKind,
    /// Position grid: the state's grid refined twice.
    pub x_grid: GridSpec,
    pub xi_points: usize,
    /// `J·Δξ`, the magnitude of the most negative sample.
    pub xi_max: f64,
    pub hbar: f64,
    pub values: Vec<f64>,
}

impl PhaseSpaceField {
    pub fn x_points(&self) -> usize {
        self.x_grid.points_per_axis()
    }

    pub fn xi_spacing(&self) -> f64 {
        2.0 * self.xi_max / self.xi_points as f64
    }

    pub fn xi(&self, j: usize) -> f64 {
        -self.xi_max + j as f64 * self.xi_spacing()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.xi_points + j]
    }

    fn cell(&self) -> f64 {
        self.x_grid.spacing() * self.xi_spacing()
    }

    /// `∬ f dx dξ`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell()
    }

    /// `∫ f(x, ξ) dξ` at every `x`.
    pub fn position_marginal(&self) -> Vec<f64> {
        let d = self.xi_spacing();
        self.values.chunks(self.xi_points).map(|row| row.iter().sum::<f64>() * d).collect()
    }

    /// `∬ f² dx dξ`; equals `‖ψ‖⁴/(πħ)` for the Wigner function of a pure state.
    pub fn purity(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.cell()
    }

    /// `∬ g(x, ξ) f dx dξ`.
    pub fn moment(&self, g: impl Fn(usize, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.x_points() {
            for j in 0..self.xi_points {
                acc += g(i, self.xi(j)) * self.at(i, j);
            }
        }
        acc * self.cell()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `Δξ = πħ/L`.
pub fn xi_spacing(grid: &GridSpec, hbar: f64) -> f64 {
    PI * hbar / grid.box_length()
}

/// Momentum samples covering the grid band plus room for the Husimi
/// smoothing: ten standard deviations `√(ħ/2)` on each side.
pub fn default_xi_points(psi: &WaveField) -> usize {
    let n = psi.grid.points_per_axis();
    let pad = (10.0 * (0.5 * psi.hbar).sqrt() / xi_spacing(&psi.grid, psi.hbar)).ceil() as usize;
    2 * (n + pad)
}

fn refine_wave(psi: &WaveField) -> Result<(GridSpec, Vec<Complex64>)> {
    let part = |f: fn(&Complex64) -> f64| ScalarField {
        grid: psi.grid,
        values: psi.values.iter().map(f).collect(),
    };
    let re = refine(&part(|z| z.re), 2)?;
    let im = refine(&part(|z| z.im), 2)?;
    let values = re.values.iter().zip(&im.values).map(|(&a, &b)| Complex64::new(a, b)).collect();
    Ok((re.grid, values))
}

/// Largest `|m|` of a Fourier mode carrying more than `1e-10` of the peak amplitude.
fn spectral_extent(psi: &WaveField) -> usize {
    let sp = Spectral::get(&psi.grid);
    let mut spec = psi.values.clone();
    sp.forward_in_place(&mut spec);
    let peak = spec.iter().map(|z| z.norm()).fold(0.0, f64::max);
    spec.iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > 1e-10 * peak)
        .map(|(i, _)| psi.grid.mode(i).unsigned_abs() as usize)
        .max()
        .unwrap_or(0)
}

/// `W(x, ξ) = (πħ)⁻¹ ∫ ψ(x+s) ψ̄(x−s) e^{−2iξs/ħ} ds`.
///
/// `xi_points` must be even; the window is `J = xi_points/2` multiples of
/// `Δξ` on each side. Samples beyond `|ξ| = πħn/L` are zero.
pub fn wigner_transform(psi: &WaveField, xi_points: usize) -> Result<PhaseSpaceField> {
    if psi.grid.dim() != 1 {
        return Err(Error::Config("phase-space transforms are one-dimensional".into()));
    }
    if xi_points < 2 || xi_points % 2 != 0 {
        return Err(Error::Config(format!("xi_points = {xi_points} must be even and positive")));
    }
    let hbar = psi.hbar;
    let dxi = xi_spacing(&psi.grid, hbar);
    let half = xi_points / 2;
    let extent = spectral_extent(psi);
    if 2 * extent >= half {
        return Err(Error::Aliasing {
            required: 2.0 * extent as f64 * dxi,
            available: half as f64 * dxi,
        });
    }
    let (fine, f) = refine_wave(psi)?;
    let m = fine.points_per_axis();
    let fft = FftPlanner::new().plan_fft_forward(m);
    let scale = 0.5 * fine.spacing() * 2.0 / (PI * hbar);
    let mut values = vec![0.0; m * xi_points];
    let mut row = vec![Complex64::new(0.0, 0.0); m];
    let mut worst_imag: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for x in 0..m {
        for (s, r) in row.iter_mut().enumerate() {
            *r = f[(x + s) % m] * f[(x + m - s) % m].conj();
        }
        fft.process(&mut row);
        for (jf, z) in row.iter().enumerate() {
            // FFT index jf carries ξ = j'Δξ with j' the signed index
            let jp = if jf < m / 2 { jf as i64 } else { jf as i64 - m as i64 };
            let j = jp + half as i64;
            worst_imag = worst_imag.max(z.im.abs());
            peak = peak.max(z.re.abs());
            if (0..xi_points as i64).contains(&j) {
                values[x * xi_points + j as usize] = scale * z.re;
            }
        }
    }
    // scale = (πħ)⁻¹·h_fine; the imaginary part is round-off of a Hermitian sum
    if worst_imag > 1e-10 * peak.max(1e-300) {
        return Err(Error::Input(format!(
            "Wigner sum has imaginary residue {worst_imag:e} against peak {peak:e}"
        )));
    }
    Ok(PhaseSpaceField {
        kind: PhaseSpaceKind::Wigner,
        x_grid: fine,
        xi_points,
        xi_max: half as f64 * dxi,
        hbar,
        values,
    })
}

/// `W̃ = e^{ħΔ_{x,ξ}/4} W`: Gaussian smoothing of variance `ħ/2` in `x` and
/// in `ξ`, applied as the exact Fourier multiplier `e^{−ħ(κ_x² + κ_ξ²)/4}`.
pub fn husimi_transform(w: &PhaseSpaceField) -> PhaseSpaceField {
    if w.kind == PhaseSpaceKind::Husimi {
        return w.clone();
    }
    let (nx, nxi) = (w.x_points(), w.xi_points);
    let mut planner = FftPlanner::new();
    let (fx, ix) = (planner.plan_fft_forward(nx), planner.plan_fft_inverse(nx));
    let (fxi, ixi) = (planner.plan_fft_forward(nxi), planner.plan_fft_inverse(nxi));
    let mut data: Vec<Complex64> = w.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for row in data.chunks_mut(nxi) {
        fxi.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); nx];
    let wave = |k: usize, n: usize, period: f64| {
        let m = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
        2.0 * PI * m / period
    };
    let lx = w.x_grid.box_length();
    let lxi = nxi as f64 * w.xi_spacing();
    let q = 0.25 * w.hbar;
    for j in 0..nxi {
        for i in 0..nx {
            col[i] = data[i * nxi + j];
        }
        fx.process(&mut col);
        let kxi = wave(j, nxi, lxi);
        for (i, c) in col.iter_mut().enumerate() {
            let kx = wave(i, nx, lx);
            *c *= (-q * (kx * kx + kxi * kxi)).exp() / (nx * nxi) as f64;
        }
        ix.process(&mut col);
        for i in 0..nx {
            data[i * nxi + j] = col[i];
        }
    }
    for row in data.chunks_mut(nxi) {
        ixi.process(row);
    }
    PhaseSpaceField {
        kind: PhaseSpaceKind::Husimi,
        values: data.iter().map(|z| z.re).collect(),
        ..w.clone()
    }
}

/// `(∬ξ²W̃, ∫|ħ∂ψ|², offset)`. The offset is the `ξ`-variance `ħ/2` of the
/// smoothing times the mass.
pub fn second_moment_check(psi: &WaveField) -> Result<(f64, f64, f64)> {
    let w = wigner_transform(psi, default_xi_points(psi))?;
    let h = husimi_transform(&w);
    let lhs = h.moment(|_, xi| xi * xi);
    let rhs = 2.0 * kinetic_energy(psi);
    Ok((lhs, rhs, lhs - rhs))
}

/// `∬|ξ − u(x)|² W̃ dx dξ`, the phase-space distance to the monokinetic
/// state `ρδ(ξ − u)`. A Wigner input is smoothed first. The fluid may live
/// on the state's grid or on the refined position grid of `w`.
pub fn monokinetic_concentration(w: &PhaseSpaceField, fluid: &FluidState) -> Result<f64> {
    let fg = fluid.rho.grid;
    if fg.dim() != 1 {
        return Err(Error::Config("phase-space diagnostics are one-dimensional".into()));
    }
    let factor = w.x_points() / fg.points_per_axis();
    if (fg.box_length() - w.x_grid.box_length()).abs() > 1e-12 * fg.box_length()
        || factor * fg.points_per_axis() != w.x_points()
        || !(factor == 1 || factor == 2)
    {
        return Err(Error::GridMismatch);
    }
    let u = refine(
        &ScalarField {
            grid: fg,
            values: fluid.u.components[0].clone(),
        },
        factor,
    )?;
    let h = husimi_transform(w);
    Ok(h.moment(|i, xi| (xi - u.values[i]).powi(2)))
}
