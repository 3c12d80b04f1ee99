//! Modulated-energy functionals coupling a wave function to a fluid state.
//!
//! Every Coulomb pairing is the spectral sum `Σ_{k≠0} â b̂* / |k|²`, the same
//! multiplier as [`poisson_solve`](crate::fields::poisson_solve).

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euler::{FluidState, RegularityMonitor};
use crate::fields::{check_same, GridSpec, ScalarField, Spectral, VectorField, WaveField};
use crate::hartree::wave_gradient;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulatedEnergyReport {
    pub time: f64,
    pub kinetic_modulated: f64,
    pub potential_gap: f64,
    /// `kinetic_modulated + potential_gap`.
    pub g_total: f64,
    /// Filled in by [`gronwall_monitor`].
    pub gronwall_envelope: Option<f64>,
    pub hbar: f64,
    /// Bookkeeping of the factorized functional, empty otherwise.
    pub extra_terms: BTreeMap<String, f64>,
}

impl ModulatedEnergyReport {
    /// `𝓔` when the report came from [`factorized_modulated_energy`].
    pub fn factorized_energy(&self) -> Option<f64> {
        self.extra_terms.get("factorized_energy").copied()
    }
}

/// `∫|(−iħ∇ − u)ψ|²`.
pub fn kinetic_modulated(psi: &WaveField, u: &VectorField) -> Result<f64> {
    check_same(&psi.grid, &u.grid).map_err(|_| Error::Config("wave function and velocity grids differ".into()))?;
    let hbar = psi.hbar;
    let grad = wave_gradient(psi);
    let mut acc = 0.0;
    for (a, d) in grad.iter().enumerate() {
        for ((p, dp), v) in psi.values.iter().zip(d).zip(&u.components[a]) {
            let w = Complex64::new(0.0, -hbar) * dp - v * p;
            acc += w.norm_sqr();
        }
    }
    Ok(acc * psi.grid.cell_volume())
}

fn spectra(rho1: &ScalarField, rho2: &ScalarField) -> Result<(std::sync::Arc<Spectral>, Vec<Complex64>)> {
    check_same(&rho1.grid, &rho2.grid)?;
    let (m1, m2) = (rho1.integral(), rho2.integral());
    if (m1 - m2).abs() > 1e-8 {
        return Err(Error::Input(format!("densities carry different mass: {m1} vs {m2}")));
    }
    let sp = Spectral::get(&rho1.grid);
    let delta: Vec<f64> = rho1.values.iter().zip(&rho2.values).map(|(a, b)| a - b).collect();
    let dh = sp.forward_real(&delta);
    Ok((sp, dh))
}

/// `∬V(ρ₁−ρ₂)(ρ₁−ρ₂) = Σ_{k≠0}|δ̂|²/|k|²`, box-normalized.
pub fn potential_gap(rho1: &ScalarField, rho2: &ScalarField) -> Result<f64> {
    let (sp, dh) = spectra(rho1, rho2)?;
    Ok(sp.coulomb_pairing(&dh, &dh, |_| 1.0))
}

/// `∫_ε^∞ ‖e^{rΔ/2}(ρ₁−ρ₂)‖² dr = Σ_{k≠0}|δ̂|² e^{−ε|k|²}/|k|²`.
pub fn heat_weak_norm(rho1: &ScalarField, rho2: &ScalarField, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("heat-flow cutoff must be nonnegative, got {eps}")));
    }
    let (sp, dh) = spectra(rho1, rho2)?;
    Ok(sp.coulomb_pairing(&dh, &dh, |k2| (-eps * k2).exp()))
}

/// Default cutoff `(2h)²` of [`heat_weak_norm`].
pub fn default_heat_epsilon(grid: &GridSpec) -> f64 {
    (2.0 * grid.spacing()).powi(2)
}

/// `∬Vab` for two densities on one grid.
pub fn coulomb_pairing(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    check_same(&a.grid, &b.grid)?;
    let sp = Spectral::get(&a.grid);
    let (ah, bh) = sp.forward_real_pair(&a.values, &b.values);
    Ok(sp.coulomb_pairing(&ah, &bh, |_| 1.0))
}

/// `𝓖 = ∫|(−iħ∇ − u)ψ|² + ∬V(|ψ|²−ρ)(|ψ|²−ρ)` at the fluid's time. The
/// caller is responsible for only passing fluid states before blow-up.
pub fn g_functional(psi: &WaveField, fluid: &FluidState) -> Result<ModulatedEnergyReport> {
    check_same(&psi.grid, &fluid.rho.grid)?;
    let kin = kinetic_modulated(psi, &fluid.u)?;
    let gap = potential_gap(&psi.modulus_sqr(), &fluid.rho)?;
    Ok(ModulatedEnergyReport {
        time: fluid.time,
        kinetic_modulated: kin,
        potential_gap: gap,
        g_total: kin + gap,
        gronwall_envelope: None,
        hbar: psi.hbar,
        extra_terms: BTreeMap::new(),
    })
}

/// `𝓖` together with the modulated energy `𝓔` of the factorized `N`-body
/// state `ψ^{⊗N}`:
/// `𝓔 = K + (N−1)/N ∬Vρ_ħρ_ħ + ∬Vρρ − 2∬Vρ_ħρ = 𝓖 − (1/N)∬Vρ_ħρ_ħ`.
pub fn factorized_modulated_energy(psi: &WaveField, fluid: &FluidState, n: usize) -> Result<ModulatedEnergyReport> {
    if n < 2 {
        return Err(Error::Input(format!("the factorized energy needs N ≥ 2, got {n}")));
    }
    let mut report = g_functional(psi, fluid)?;
    let sp = Spectral::get(&psi.grid);
    let (ah, bh) = sp.forward_real_pair(&psi.modulus_sqr().values, &fluid.rho.values);
    let aa = sp.coulomb_pairing(&ah, &ah, |_| 1.0);
    let ab = sp.coulomb_pairing(&ah, &bh, |_| 1.0);
    let bb = sp.coulomb_pairing(&bh, &bh, |_| 1.0);
    let nf = n as f64;
    let pair = (nf - 1.0) / nf * aa;
    let energy = report.kinetic_modulated + pair + bb - 2.0 * ab;
    let t = &mut report.extra_terms;
    t.insert("n".into(), nf);
    t.insert("pair_term".into(), pair);
    t.insert("cross_term".into(), -2.0 * ab);
    t.insert("fluid_term".into(), bb);
    t.insert("self_interaction".into(), aa / nf);
    t.insert("factorized_energy".into(), energy);
    Ok(report)
}

/// Outcome of the Gronwall envelope check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallCheck {
    pub c_growth: f64,
    pub envelope: Vec<f64>,
    /// Time of the first sample above its envelope.
    pub first_violation: Option<f64>,
}

impl GronwallCheck {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// `G(0)e^{c t s} + (ħ²/2)D(e^{c t s} − 1)/(c s)` with `s = ‖∇u‖`, `D = ‖Δ div u‖`.
pub fn gronwall_envelope(g0: f64, hbar: f64, grad_u: f64, lap_div_u: f64, c_growth: f64, t: f64) -> f64 {
    let rate = c_growth * grad_u;
    let source = 0.5 * hbar * hbar * lap_div_u;
    if rate * t < 1e-12 {
        return g0 + source * t;
    }
    let e = (rate * t).exp();
    g0 * e + source * (e - 1.0) / rate
}

/// Checks every report against the envelope built from `g_total` at the
/// first sample and the running sups of the fluid norms up to its time.
/// Samples exceed the envelope when above it by more than round-off
/// (`1e-9` relative plus `1e-14` absolute). The envelopes are written back
/// into the reports.
pub fn gronwall_monitor(
    reports: &mut [ModulatedEnergyReport],
    fluid_norms: &[RegularityMonitor],
    c_growth: f64,
) -> Result<GronwallCheck> {
    if reports.len() != fluid_norms.len() {
        return Err(Error::SizeMismatch {
            expected: reports.len(),
            got: fluid_norms.len(),
        });
    }
    let mut check = GronwallCheck {
        c_growth,
        envelope: Vec::with_capacity(reports.len()),
        first_violation: None,
    };
    let Some(first) = reports.first() else {
        return Ok(check);
    };
    let (t0, g0) = (first.time, first.g_total);
    let mut grad_sup: f64 = 0.0;
    let mut lap_sup: f64 = 0.0;
    for (r, m) in reports.iter_mut().zip(fluid_norms) {
        grad_sup = grad_sup.max(m.grad_u_inf);
        lap_sup = lap_sup.max(m.laplacian_div_u_inf);
        let env = gronwall_envelope(g0, r.hbar, grad_sup, lap_sup, c_growth, r.time - t0);
        r.gronwall_envelope = Some(env);
        check.envelope.push(env);
        let over = !(r.g_total <= env * (1.0 + 1e-9) + 1e-14);
        if over && check.first_violation.is_none() {
            check.first_violation = Some(r.time);
        }
    }
    Ok(check)
}
