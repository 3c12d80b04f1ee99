//! Pressureless Euler-Poisson system
//! `∂_tρ + div(ρu) = 0`, `∂_tu + (u·∇)u = −∇(V⋆ρ)`,
//! pseudo-spectral in space with classical RK4 in time.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{check_same, spectral_gradient, ScalarField, Spectral, VectorField, WaveField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    pub rho: ScalarField,
    pub u: VectorField,
    pub time: f64,
}

impl FluidState {
    pub fn new(rho: ScalarField, u: VectorField) -> Result<Self> {
        check_same(&rho.grid, &u.grid)?;
        rho.grid.check_len(rho.values.len())?;
        if u.components.len() != rho.grid.dim() {
            return Err(Error::SizeMismatch {
                expected: rho.grid.dim(),
                got: u.components.len(),
            });
        }
        Ok(Self { rho, u, time: 0.0 })
    }
}

/// Sup-norms that control the Gronwall factors of the modulated energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityMonitor {
    /// Pointwise Frobenius norm of `∇u`, maximized over the grid.
    pub grad_u_inf: f64,
    pub laplacian_div_u_inf: f64,
    pub rho_inf: f64,
    pub blow_up_flag: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidEnergy {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

/// Right-hand side `(∂_tρ, ∂_tu)`; products are formed on the grid and their
/// spectra truncated by the dealiasing mask.
pub fn euler_poisson_rhs(state: &FluidState) -> Result<(ScalarField, VectorField)> {
    let grid = state.rho.grid;
    let dim = grid.dim();
    let sp = Spectral::get(&grid);
    let cells = grid.cells();

    let rho_hat = sp.forward_real(&state.rho.values);
    let u_refs: Vec<&[f64]> = state.u.components.iter().map(|c| c.as_slice()).collect();
    let u_hat = sp.forward_real_many(&u_refs);

    // ∂_b u_a for all (a, b)
    let mut grad_specs = Vec::with_capacity(dim * dim);
    for uh in &u_hat {
        for b in 0..dim {
            grad_specs.push(sp.derivative_spectrum(uh, b, false));
        }
    }
    let grad = sp.inverse_real_many(&grad_specs);

    // fluxes ρu_a and advection (u·∇)u_a, transformed together
    let mut products: Vec<Vec<f64>> = Vec::with_capacity(2 * dim);
    for a in 0..dim {
        let ua = &state.u.components[a];
        products.push(state.rho.values.iter().zip(ua).map(|(r, u)| r * u).collect());
    }
    for a in 0..dim {
        let mut adv = vec![0.0; cells];
        for b in 0..dim {
            let ub = &state.u.components[b];
            let g = &grad[a * dim + b];
            for i in 0..cells {
                adv[i] += ub[i] * g[i];
            }
        }
        products.push(adv);
    }
    let prod_refs: Vec<&[f64]> = products.iter().map(|p| p.as_slice()).collect();
    let mut prod_hat = sp.forward_real_many(&prod_refs);
    for p in prod_hat.iter_mut() {
        sp.apply_mask(p);
    }

    let mut drho_hat = vec![Complex64::new(0.0, 0.0); cells];
    for a in 0..dim {
        for (o, d) in drho_hat.iter_mut().zip(sp.derivative_spectrum(&prod_hat[a], a, false)) {
            *o -= d;
        }
    }
    let phi_hat = sp.inverse_laplacian_spectrum(&rho_hat);
    let mut out_specs = vec![drho_hat];
    for a in 0..dim {
        let force = sp.derivative_spectrum(&phi_hat, a, true);
        out_specs.push(
            prod_hat[dim + a]
                .iter()
                .zip(&force)
                .map(|(adv, f)| -adv - f)
                .collect(),
        );
    }
    let mut out = sp.inverse_real_many(&out_specs).into_iter();
    let drho = ScalarField {
        grid,
        values: out.next().expect("density rate"),
    };
    let du = VectorField {
        grid,
        components: out.collect(),
    };
    Ok((drho, du))
}

/// Sup-norms of `∇u`, `Δ div u` and `ρ`; the flag is raised when the
/// velocity gradient exceeds `threshold` or any norm is not finite.
pub fn regularity_monitor(state: &FluidState, threshold: f64) -> RegularityMonitor {
    let grid = state.rho.grid;
    let dim = grid.dim();
    let sp = Spectral::get(&grid);
    let refs: Vec<&[f64]> = state.u.components.iter().map(|c| c.as_slice()).collect();
    let u_hat = sp.forward_real_many(&refs);
    let mut specs = Vec::with_capacity(dim * dim + 1);
    let mut lap_div = vec![Complex64::new(0.0, 0.0); grid.cells()];
    for (a, uh) in u_hat.iter().enumerate() {
        for b in 0..dim {
            specs.push(sp.derivative_spectrum(uh, b, false));
        }
        for ((o, d), &k2) in lap_div
            .iter_mut()
            .zip(sp.derivative_spectrum(uh, a, false))
            .zip(sp.k_squared())
        {
            *o -= k2 * d;
        }
    }
    specs.push(lap_div);
    let fields = sp.inverse_real_many(&specs);
    let mut grad_u_inf: f64 = 0.0;
    for i in 0..grid.cells() {
        let s: f64 = (0..dim * dim).map(|j| fields[j][i] * fields[j][i]).sum();
        grad_u_inf = grad_u_inf.max(s.sqrt());
        if s.is_nan() {
            grad_u_inf = f64::NAN;
            break;
        }
    }
    let laplacian_div_u_inf = fields[dim * dim].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rho_inf = state.rho.max_abs();
    let finite = grad_u_inf.is_finite() && laplacian_div_u_inf.is_finite() && rho_inf.is_finite();
    RegularityMonitor {
        grad_u_inf,
        laplacian_div_u_inf,
        rho_inf,
        blow_up_flag: !finite || grad_u_inf > threshold,
    }
}

pub fn fluid_mass(state: &FluidState) -> f64 {
    state.rho.integral()
}

/// Total momentum `∫ρu`.
pub fn fluid_momentum(state: &FluidState) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (a, c) in state.u.components.iter().enumerate() {
        out[a] = state.rho.values.iter().zip(c).map(|(r, u)| r * u).sum::<f64>()
            * state.rho.grid.cell_volume();
    }
    out
}

/// `½∫ρ|u|² + ½⟨ρ, V⋆ρ⟩`.
pub fn fluid_energy(state: &FluidState) -> FluidEnergy {
    let grid = state.rho.grid;
    let mut kinetic = 0.0;
    for c in &state.u.components {
        kinetic += state.rho.values.iter().zip(c).map(|(r, u)| r * u * u).sum::<f64>();
    }
    kinetic *= 0.5 * grid.cell_volume();
    let sp = Spectral::get(&grid);
    let rh = sp.forward_real(&state.rho.values);
    let potential = 0.5 * sp.coulomb_pairing(&rh, &rh, |_| 1.0);
    FluidEnergy {
        kinetic,
        potential,
        total: kinetic + potential,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerOptions {
    /// Courant number in `dt ≤ cfl·h/max(|u|, 1)`.
    pub cfl: f64,
    /// `‖∇u‖_∞` above which the monitor flags the solution.
    pub blow_up_threshold: f64,
    /// Most negative density tolerated before the run is aborted.
    pub density_floor: f64,
}

impl EulerOptions {
    /// Defaults for a run of length `t_run`: threshold `50/t_run`.
    pub fn for_run(t_run: f64) -> Self {
        Self {
            cfl: 0.5,
            blow_up_threshold: 50.0 / t_run,
            density_floor: -1e-6,
        }
    }
}

/// Largest step admitted by the CFL guard.
pub fn cfl_bound(state: &FluidState, cfl: f64) -> f64 {
    cfl * state.rho.grid.spacing() / state.u.max_norm().max(1.0)
}

fn axpy(base: &FluidState, k: &(ScalarField, VectorField), s: f64) -> FluidState {
    let rho = ScalarField {
        grid: base.rho.grid,
        values: base.rho.values.iter().zip(&k.0.values).map(|(a, b)| a + s * b).collect(),
    };
    let u = VectorField {
        grid: base.u.grid,
        components: base
            .u
            .components
            .iter()
            .zip(&k.1.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + s * y).collect())
            .collect(),
    };
    FluidState {
        rho,
        u,
        time: base.time,
    }
}

/// One classical RK4 step; `Err(StepSize)` on a CFL violation and
/// `Err(BlowUp)` when the result is not finite or not a density.
pub fn euler_poisson_step(state: &FluidState, dt: f64, options: &EulerOptions) -> Result<FluidState> {
    let bound = cfl_bound(state, options.cfl);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, bound });
    }
    let k1 = euler_poisson_rhs(state)?;
    let k2 = euler_poisson_rhs(&axpy(state, &k1, 0.5 * dt))?;
    let k3 = euler_poisson_rhs(&axpy(state, &k2, 0.5 * dt))?;
    let k4 = euler_poisson_rhs(&axpy(state, &k3, dt))?;
    let w = dt / 6.0;
    let combine = |x: f64, a: f64, b: f64, c: f64, d: f64| x + w * (a + 2.0 * b + 2.0 * c + d);
    let rho: Vec<f64> = (0..state.rho.values.len())
        .map(|i| {
            combine(
                state.rho.values[i],
                k1.0.values[i],
                k2.0.values[i],
                k3.0.values[i],
                k4.0.values[i],
            )
        })
        .collect();
    let u: Vec<Vec<f64>> = (0..state.u.components.len())
        .map(|a| {
            (0..rho.len())
                .map(|i| {
                    combine(
                        state.u.components[a][i],
                        k1.1.components[a][i],
                        k2.1.components[a][i],
                        k3.1.components[a][i],
                        k4.1.components[a][i],
                    )
                })
                .collect()
        })
        .collect();
    let finite = rho.iter().chain(u.iter().flatten()).all(|v| v.is_finite());
    let min_rho = rho.iter().cloned().fold(f64::INFINITY, f64::min);
    if !finite || min_rho < options.density_floor {
        return Err(Error::BlowUp {
            last_valid_time: state.time,
        });
    }
    Ok(FluidState {
        rho: ScalarField {
            grid: state.rho.grid,
            values: rho,
        },
        u: VectorField {
            grid: state.u.grid,
            components: u,
        },
        time: state.time + dt,
    })
}

/// Integrator that stops trusting the solution once the monitor flags it.
#[derive(Debug, Clone)]
pub struct EulerSolver {
    state: FluidState,
    options: EulerOptions,
    monitor: RegularityMonitor,
    flagged_at: Option<f64>,
}

impl EulerSolver {
    pub fn new(state: FluidState, options: EulerOptions) -> Self {
        let monitor = regularity_monitor(&state, options.blow_up_threshold);
        let flagged_at = monitor.blow_up_flag.then_some(state.time);
        Self {
            state,
            options,
            monitor,
            flagged_at,
        }
    }

    pub fn state(&self) -> &FluidState {
        &self.state
    }

    pub fn monitor(&self) -> &RegularityMonitor {
        &self.monitor
    }

    /// Time at which the monitor first raised the flag.
    pub fn flagged_at(&self) -> Option<f64> {
        self.flagged_at
    }

    /// Advance by `dt`. A flagged solution is not advanced further.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if let Some(t) = self.flagged_at {
            return Err(Error::BlowUp { last_valid_time: t });
        }
        self.state = euler_poisson_step(&self.state, dt, &self.options)?;
        self.monitor = regularity_monitor(&self.state, self.options.blow_up_threshold);
        if self.monitor.blow_up_flag {
            self.flagged_at = Some(self.state.time);
        }
        Ok(())
    }
}

/// Monokinetic WKB data `ψ = √ρ_in e^{iS/ħ}` and the matching fluid state
/// `(ρ_in, ∇S)`.
pub fn wkb_initializer(rho_in: &ScalarField, phase: &ScalarField, hbar: f64) -> Result<(WaveField, FluidState)> {
    check_same(&rho_in.grid, &phase.grid)?;
    let mass = rho_in.integral();
    if (mass - 1.0).abs() > 1e-8 || rho_in.min() < -1e-12 {
        return Err(Error::Input(format!(
            "initial density must be a probability density (mass {mass}, min {})",
            rho_in.min()
        )));
    }
    let values = rho_in
        .values
        .iter()
        .zip(&phase.values)
        .map(|(&r, &s)| Complex64::from_polar(r.max(1e-30).sqrt(), s / hbar))
        .collect();
    let psi = WaveField::new(rho_in.grid, hbar, values)?;
    let u = spectral_gradient(phase)?;
    let fluid = FluidState::new(rho_in.clone(), u)?;
    Ok((psi, fluid))
}

/// `ħ²∫|∇√ρ|²`, the modulated kinetic energy of WKB data at `t = 0`.
pub fn wkb_kinetic_floor(rho: &ScalarField, hbar: f64) -> Result<f64> {
    let amp = ScalarField {
        grid: rho.grid,
        values: rho.values.iter().map(|r| r.max(1e-30).sqrt()).collect(),
    };
    let sp = Spectral::get(&rho.grid);
    let ah = sp.forward_real(&amp.values);
    let s: f64 = ah
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let k2: f64 = (0..rho.grid.dim()).map(|a| sp.k_component(i, a).powi(2)).sum();
            k2 * z.norm_sqr()
        })
        .sum();
    Ok(hbar * hbar * s * rho.grid.cell_volume() / rho.grid.cells() as f64)
}
