//! Split-step Fourier integration of the Hartree equation
//! `iħ∂_tψ = −(ħ²/2)Δψ + (V⋆|ψ|²)ψ` and its observables.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{GridSpec, ScalarField, Spectral, VectorField, WaveField};

/// Blow-up guard: abort once `max|ψ|²` exceeds this multiple of its initial value.
pub const BLOW_UP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HartreeState {
    pub psi: WaveField,
    pub time: f64,
    pub step_count: u64,
}

impl HartreeState {
    pub fn new(psi: WaveField) -> Self {
        Self {
            psi,
            time: 0.0,
            step_count: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HartreeEnergy {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HartreeOptions {
    /// Multiplies the mean-field potential; 0 gives free Schrödinger evolution.
    pub coupling: f64,
    /// Recompute `V⋆ρ` from the updated density for the closing half step.
    pub self_consistent_half: bool,
}

impl Default for HartreeOptions {
    fn default() -> Self {
        Self {
            coupling: 1.0,
            self_consistent_half: true,
        }
    }
}

/// Mean-field potential `V⋆ρ` with the density dealiased before the solve.
pub fn mean_field_potential(rho: &ScalarField) -> Result<ScalarField> {
    rho.grid.check_len(rho.values.len())?;
    let sp = Spectral::get(&rho.grid);
    let mut rh = sp.forward_real(&rho.values);
    sp.apply_mask(&mut rh);
    Ok(ScalarField {
        grid: rho.grid,
        values: sp.inverse_real(&sp.inverse_laplacian_spectrum(&rh)),
    })
}

/// Time integrator holding the potential of the current density, so that
/// each step costs one Poisson solve.
#[derive(Debug, Clone)]
pub struct HartreeSolver {
    state: HartreeState,
    options: HartreeOptions,
    potential: Vec<f64>,
    initial_max: f64,
}

impl HartreeSolver {
    pub fn new(state: HartreeState, options: HartreeOptions) -> Result<Self> {
        let rho = density(&state);
        let potential = if options.coupling != 0.0 {
            mean_field_potential(&rho)?.values
        } else {
            vec![0.0; rho.values.len()]
        };
        let initial_max = rho.max_abs();
        if !initial_max.is_finite() || initial_max == 0.0 {
            return Err(Error::Input("wave function is zero or not finite".into()));
        }
        Ok(Self {
            state,
            options,
            potential,
            initial_max,
        })
    }

    pub fn state(&self) -> &HartreeState {
        &self.state
    }

    pub fn into_state(self) -> HartreeState {
        self.state
    }

    pub fn options(&self) -> &HartreeOptions {
        &self.options
    }

    fn apply_phase(psi: &mut [Complex64], potential: &[f64], factor: f64) {
        for (z, &v) in psi.iter_mut().zip(potential) {
            *z *= Complex64::from_polar(1.0, -factor * v);
        }
    }

    /// One Strang step. On failure the state is left at the last valid time.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !dt.is_finite() || dt == 0.0 {
            return Err(Error::StepSize { dt, bound: f64::INFINITY });
        }
        let grid = self.state.psi.grid;
        let hbar = self.state.psi.hbar;
        let sp = Spectral::get(&grid);
        let half = 0.5 * dt * self.options.coupling / hbar;
        let mut psi = self.state.psi.values.clone();
        Self::apply_phase(&mut psi, &self.potential, half);
        sp.forward_in_place(&mut psi);
        let c = 0.5 * hbar * dt;
        for (z, &k2) in psi.iter_mut().zip(sp.k_squared()) {
            *z *= Complex64::from_polar(1.0, -c * k2);
        }
        sp.inverse_in_place(&mut psi);
        let mut max_rho: f64 = 0.0;
        let rho: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
        for &r in &rho {
            if !r.is_finite() {
                max_rho = f64::INFINITY;
                break;
            }
            max_rho = max_rho.max(r);
        }
        if max_rho > BLOW_UP_FACTOR * self.initial_max {
            return Err(Error::BlowUp {
                last_valid_time: self.state.time,
            });
        }
        let potential = if self.options.coupling != 0.0 && self.options.self_consistent_half {
            mean_field_potential(&ScalarField { grid, values: rho })?.values
        } else {
            self.potential.clone()
        };
        Self::apply_phase(&mut psi, &potential, half);
        self.potential = potential;
        self.state.psi.values = psi;
        self.state.time += dt;
        self.state.step_count += 1;
        Ok(())
    }

    pub fn advance(&mut self, dt: f64, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step(dt)?;
        }
        Ok(())
    }
}

/// Single Strang step from `state`.
pub fn hartree_step(state: &HartreeState, dt: f64, options: &HartreeOptions) -> Result<HartreeState> {
    let mut s = HartreeSolver::new(state.clone(), *options)?;
    s.step(dt)?;
    Ok(s.into_state())
}

/// `ρ = |ψ|²`.
pub fn density(state: &HartreeState) -> ScalarField {
    state.psi.modulus_sqr()
}

/// Complex spectral derivatives `∂_a ψ` (unmasked).
pub fn wave_gradient(psi: &WaveField) -> Vec<Vec<Complex64>> {
    let sp = Spectral::get(&psi.grid);
    let mut spec = psi.values.clone();
    sp.forward_in_place(&mut spec);
    (0..psi.grid.dim())
        .map(|a| {
            let mut d: Vec<Complex64> = spec
                .iter()
                .enumerate()
                .map(|(i, &z)| Complex64::new(0.0, sp.k_component(i, a)) * z)
                .collect();
            sp.inverse_in_place(&mut d);
            d
        })
        .collect()
}

/// Current `J = ħ Im(ψ̄∇ψ)`.
pub fn current(state: &HartreeState) -> VectorField {
    let psi = &state.psi;
    let hbar = psi.hbar;
    let components = wave_gradient(psi)
        .into_iter()
        .map(|d| {
            psi.values
                .iter()
                .zip(&d)
                .map(|(p, q)| hbar * (p.conj() * q).im)
                .collect()
        })
        .collect();
    VectorField {
        grid: psi.grid,
        components,
    }
}

/// Kinetic energy `(ħ²/2)∫|∇ψ|²` by Parseval.
pub fn kinetic_energy(psi: &WaveField) -> f64 {
    let sp = Spectral::get(&psi.grid);
    let mut spec = psi.values.clone();
    sp.forward_in_place(&mut spec);
    let s: f64 = spec
        .iter()
        .zip(sp.k_squared())
        .map(|(z, &k2)| k2 * z.norm_sqr())
        .sum();
    0.5 * psi.hbar * psi.hbar * s * psi.grid.cell_volume() / psi.grid.cells() as f64
}

/// Kinetic energy from the real-space gradient; agrees with
/// [`kinetic_energy`] for fields without a Nyquist component.
pub fn kinetic_energy_real_space(psi: &WaveField) -> f64 {
    let s: f64 = wave_gradient(psi)
        .iter()
        .map(|d| d.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum();
    0.5 * psi.hbar * psi.hbar * s * psi.grid.cell_volume()
}

/// `½⟨ρ, V⋆ρ⟩` with the same dealiasing as the time stepper.
pub fn potential_energy(rho: &ScalarField) -> f64 {
    let sp = Spectral::get(&rho.grid);
    let rh = sp.forward_real(&rho.values);
    let norm = rho.grid.cell_volume() / rho.grid.cells() as f64;
    let mut acc = 0.0;
    for (i, (z, &k2)) in rh.iter().zip(sp.k_squared()).enumerate() {
        if k2 > 0.0 && sp.kept(i) {
            acc += z.norm_sqr() / k2;
        }
    }
    0.5 * acc * norm
}

pub fn hartree_energy(state: &HartreeState) -> HartreeEnergy {
    let kinetic = kinetic_energy(&state.psi);
    let potential = potential_energy(&density(state));
    HartreeEnergy {
        kinetic,
        potential,
        total: kinetic + potential,
    }
}

/// `max_t ‖(ρ(t+dt) − ρ(t−dt))/(2dt) + div J(t)‖₂` over the interior states.
pub fn continuity_residual(states: &[HartreeState]) -> Result<f64> {
    if states.len() < 3 {
        return Err(Error::Input("continuity residual needs at least 3 states".into()));
    }
    let grid = states[0].psi.grid;
    let dt = states[1].time - states[0].time;
    if !(dt > 0.0) {
        return Err(Error::Input("states must be ordered in time".into()));
    }
    for w in states.windows(2) {
        crate::fields::check_same(&w[0].psi.grid, &w[1].psi.grid)?;
        let d = w[1].time - w[0].time;
        if (d - dt).abs() > 1e-9 * dt.abs().max(w[1].time.abs()) {
            return Err(Error::Input(format!("non-uniform time spacing: {d} vs {dt}")));
        }
    }
    let sp = Spectral::get(&grid);
    let mut worst: f64 = 0.0;
    for i in 1..states.len() - 1 {
        let j = current(&states[i]);
        let refs: Vec<&[f64]> = j.components.iter().map(|c| c.as_slice()).collect();
        let specs = sp.forward_real_many(&refs);
        let mut div = vec![Complex64::new(0.0, 0.0); grid.cells()];
        for (a, s) in specs.iter().enumerate() {
            for (o, d) in div.iter_mut().zip(sp.derivative_spectrum(s, a, false)) {
                *o += d;
            }
        }
        let div = sp.inverse_real(&div);
        let after = &states[i + 1].psi.values;
        let before = &states[i - 1].psi.values;
        let mut acc = 0.0;
        for c in 0..grid.cells() {
            let drho = (after[c].norm_sqr() - before[c].norm_sqr()) / (2.0 * dt);
            let r = drho + div[c];
            acc += r * r;
        }
        worst = worst.max((acc * grid.cell_volume()).sqrt());
    }
    Ok(worst)
}

/// Imaginary-time relaxation towards the lowest-energy state reachable from
/// `psi` (symmetries of the initial data are preserved by the flow).
pub fn relax(psi: &WaveField, tau: f64, steps: usize) -> Result<WaveField> {
    let grid = psi.grid;
    let hbar = psi.hbar;
    let sp = Spectral::get(&grid);
    let mut out = psi.clone();
    out.normalize()?;
    for _ in 0..steps {
        let phi = mean_field_potential(&out.modulus_sqr())?;
        for (z, &v) in out.values.iter_mut().zip(&phi.values) {
            *z *= (-0.5 * tau * v / hbar).exp();
        }
        sp.forward_in_place(&mut out.values);
        for (z, &k2) in out.values.iter_mut().zip(sp.k_squared()) {
            *z *= (-0.5 * hbar * tau * k2).exp();
        }
        sp.inverse_in_place(&mut out.values);
        let phi = mean_field_potential(&out.modulus_sqr())?;
        for (z, &v) in out.values.iter_mut().zip(&phi.values) {
            *z *= (-0.5 * tau * v / hbar).exp();
        }
        out.normalize()?;
    }
    Ok(out)
}

/// Normalized plane wave `e^{ik·x}/√|box|` with `k = 2π m/L`.
pub fn plane_wave(grid: GridSpec, hbar: f64, m: [i64; 3]) -> Result<WaveField> {
    let kk = 2.0 * std::f64::consts::PI / grid.box_length();
    let amp = 1.0 / grid.volume().sqrt();
    WaveField::from_fn(grid, hbar, |x| {
        let ph = kk * (m[0] as f64 * x[0] + m[1] as f64 * x[1] + m[2] as f64 * x[2]);
        Complex64::from_polar(amp, ph)
    })
}

/// Spectral fourth moment `∫|(ħ∇)²ψ|²`, reported but not bounded.
pub fn fourth_moment(psi: &WaveField) -> f64 {
    let sp = Spectral::get(&psi.grid);
    let mut spec = psi.values.clone();
    sp.forward_in_place(&mut spec);
    let h2 = psi.hbar * psi.hbar;
    let s: f64 = spec
        .iter()
        .zip(sp.k_squared())
        .map(|(z, &k2)| (h2 * k2).powi(2) * z.norm_sqr())
        .sum();
    s * psi.grid.cell_volume() / psi.grid.cells() as f64
}
