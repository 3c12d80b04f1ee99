//! Serfaty's modulated interaction `F_N` and its transport derivative `F'_N`
//! for a configuration relative to a density `ρ` and velocity `u`:
//!
//! `F_N = N²∬_{x≠y} G d(μ−ρ)d(μ−ρ)`, `F'_N = N²∬_{x≠y}(u(x)−u(y))·∇G d(μ−ρ)d(μ−ρ)`
//! with `μ` the empirical measure and `G` the periodic kernel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pair_interactions, sub, BoundaryMode, ParticleSystem};
use crate::error::{Error, Result};
use crate::euler::{regularity_monitor, FluidState};
use crate::fields::{check_same, poisson_solve, Interpolator, ScalarField, Spectral, VectorField};
use crate::stats::{log_log_fit, LinearFit};

/// Lagrange order and refinement used to read grid potentials at particles.
const INTERP_ORDER: usize = 8;
const INTERP_REFINE: usize = 2;

fn interpolate(f: &ScalarField) -> Result<Interpolator> {
    Interpolator::new(f, INTERP_ORDER, INTERP_REFINE)
}

fn check_geometry(ps: &ParticleSystem, rho: &ScalarField) -> Result<()> {
    if ps.mode != BoundaryMode::Periodic {
        return Err(Error::Config("modulated functionals need the periodic kernel".into()));
    }
    if rho.grid.dim() != 3 {
        return Err(Error::Config("modulated functionals need a 3-D grid".into()));
    }
    if (rho.grid.box_length() - ps.box_length).abs() > 1e-12 * ps.box_length {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// The three terms of `F_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FnTerms {
    /// `Σ_{j≠k} G(x_j − x_k)`.
    pub pair: f64,
    /// `−2N Σ_j (G⋆ρ)(x_j)`.
    pub cross: f64,
    /// `N² ∬Gρρ`.
    pub mean_field: f64,
    pub total: f64,
}

/// Precomputed `G⋆ρ` and `∬Gρρ` for evaluating `F_N` on many configurations.
#[derive(Debug, Clone)]
pub struct MeanFieldProbe {
    rho: ScalarField,
    phi: Interpolator,
    self_energy: f64,
}

impl MeanFieldProbe {
    pub fn new(rho: &ScalarField) -> Result<Self> {
        if rho.grid.dim() != 3 {
            return Err(Error::Config("modulated functionals need a 3-D grid".into()));
        }
        let sp = Spectral::get(&rho.grid);
        let rh = sp.forward_real(&rho.values);
        let self_energy = sp.coulomb_pairing(&rh, &rh, |_| 1.0);
        let phi = poisson_solve(rho)?;
        Ok(Self {
            rho: rho.clone(),
            phi: interpolate(&phi)?,
            self_energy,
        })
    }

    /// `∬Gρρ`.
    pub fn self_energy(&self) -> f64 {
        self.self_energy
    }

    /// `(G⋆ρ)(x)`.
    pub fn potential(&self, x: [f64; 3]) -> f64 {
        self.phi.eval(x)
    }

    /// `F_N`; `pair_sum = Σ_{j<k} G` may be passed in when already known.
    pub fn f_n(&self, ps: &ParticleSystem, pair_sum: Option<f64>) -> Result<FnTerms> {
        check_geometry(ps, &self.rho)?;
        let half = match pair_sum {
            Some(p) => p,
            None => pair_interactions(ps)?.potential,
        };
        let n = ps.n() as f64;
        let pair = 2.0 * half;
        let cross = -2.0 * n * ps.positions.iter().map(|&x| self.potential(x)).sum::<f64>();
        let mean_field = n * n * self.self_energy;
        Ok(FnTerms {
            pair,
            cross,
            mean_field,
            total: pair + cross + mean_field,
        })
    }
}

/// `F_N(X_N, ρ)`.
pub fn configuration_f_n(ps: &ParticleSystem, rho: &ScalarField) -> Result<f64> {
    MeanFieldProbe::new(rho)?.f_n(ps, None).map(|t| t.total)
}

fn component(u: &VectorField, a: usize) -> ScalarField {
    ScalarField {
        grid: u.grid,
        values: u.components[a].clone(),
    }
}

/// Rows of the pair triangle per reduction block.
const ROW_BLOCK: usize = 32;

/// `F'_N(X_N, (ρ, u))`.
///
/// The pair term uses `u` interpolated at the particles. With
/// `φ = G⋆ρ` and `φ_i = G⋆(u_iρ)` the cross term is
/// `−2N Σ_j [u·∇φ − Σ_i ∂_iφ_i](x_j)` and the last term `2N²∫ρu·∇φ`.
pub fn configuration_f_prime_n(ps: &ParticleSystem, rho: &ScalarField, u: &VectorField) -> Result<f64> {
    f_prime_terms(ps, rho, u).map(|t| t.total)
}

/// The three terms of `F'_N`, laid out as for `F_N`.
pub fn f_prime_terms(ps: &ParticleSystem, rho: &ScalarField, u: &VectorField) -> Result<FnTerms> {
    check_geometry(ps, rho)?;
    check_same(&rho.grid, &u.grid)?;
    let grid = rho.grid;
    let sp = Spectral::get(&grid);
    let phi_hat = sp.inverse_laplacian_spectrum(&sp.forward_real(&rho.values));
    let mut specs = Vec::with_capacity(6);
    for a in 0..3 {
        specs.push(sp.derivative_spectrum(&phi_hat, a, false));
    }
    let mut div = vec![num_complex::Complex64::new(0.0, 0.0); grid.cells()];
    for a in 0..3 {
        let flux: Vec<f64> = u.components[a].iter().zip(&rho.values).map(|(v, r)| v * r).collect();
        let fh = sp.inverse_laplacian_spectrum(&sp.forward_real(&flux));
        for (o, d) in div.iter_mut().zip(sp.derivative_spectrum(&fh, a, false)) {
            *o += d;
        }
    }
    specs.push(div);
    let f = sp.inverse_real_many(&specs);
    let mut middle = vec![0.0; grid.cells()];
    let mut last = 0.0;
    for i in 0..grid.cells() {
        let u_grad_phi: f64 = (0..3).map(|a| u.components[a][i] * f[a][i]).sum();
        middle[i] = u_grad_phi - f[3][i];
        last += rho.values[i] * u_grad_phi;
    }
    last *= grid.cell_volume();
    let middle = interpolate(&ScalarField { grid, values: middle })?;
    let ui = (0..3).map(|a| interpolate(&component(u, a))).collect::<Result<Vec<_>>>()?;
    let n = ps.n();
    let uj: Vec<[f64; 3]> = ps
        .positions
        .iter()
        .map(|&x| [ui[0].eval(x), ui[1].eval(x), ui[2].eval(x)])
        .collect();

    let kernel = ps.kernel();
    let x = &ps.positions;
    let blocks: Vec<Result<f64>> = (0..n.div_ceil(ROW_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = 0.0;
            for j in b * ROW_BLOCK..((b + 1) * ROW_BLOCK).min(n) {
                for k in j + 1..n {
                    let d = sub(x[j], x[k]);
                    if kernel.distance(d) < 1e-10 * ps.box_length {
                        return Err(Error::NearCollision {
                            i: j,
                            j: k,
                            distance: kernel.distance(d),
                            time: ps.time,
                        });
                    }
                    let (_, g) = kernel.value_gradient(d)?;
                    acc += (0..3).map(|a| (uj[j][a] - uj[k][a]) * g[a]).sum::<f64>();
                }
            }
            Ok(acc)
        })
        .collect();
    let mut pair = 0.0;
    for b in blocks {
        pair += b?;
    }
    let nf = n as f64;
    let cross = -2.0 * nf * x.iter().map(|&p| middle.eval(p)).sum::<f64>();
    let pair = 2.0 * pair;
    let mean_field = 2.0 * nf * nf * last;
    Ok(FnTerms {
        pair,
        cross,
        mean_field,
        total: pair + cross + mean_field,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationEnergy {
    pub f_n: f64,
    pub f_prime_n: f64,
    /// `(1/N) Σ_j |v_j − u(x_j)|²`.
    pub kinetic_modulated: f64,
    /// `kinetic_modulated + F_N/N²`.
    pub total_modulated_per_particle: f64,
    /// `(F_N)_− / N^{4/3}`, the ratio bounded by the lower-bound inequality.
    pub lower_bound_ratio: f64,
}

/// All configuration-level diagnostics of `(X_N, V_N)` against `(ρ, u)`.
pub fn configuration_energy(ps: &ParticleSystem, rho: &ScalarField, u: &VectorField) -> Result<ConfigurationEnergy> {
    let f_n = configuration_f_n(ps, rho)?;
    let f_prime_n = configuration_f_prime_n(ps, rho, u)?;
    let kinetic_modulated = kinetic_modulated_particles(ps, u)?;
    let n = ps.n() as f64;
    Ok(ConfigurationEnergy {
        f_n,
        f_prime_n,
        kinetic_modulated,
        total_modulated_per_particle: kinetic_modulated + f_n / (n * n),
        lower_bound_ratio: (-f_n).max(0.0) / n.powf(4.0 / 3.0),
    })
}

/// `(1/N) Σ_j |v_j − u(x_j)|²`.
pub fn kinetic_modulated_particles(ps: &ParticleSystem, u: &VectorField) -> Result<f64> {
    let ui = (0..u.components.len())
        .map(|a| interpolate(&component(u, a)))
        .collect::<Result<Vec<_>>>()?;
    let s: f64 = ps
        .positions
        .iter()
        .zip(&ps.velocities)
        .map(|(&x, v)| (0..3).map(|a| (v[a] - ui.get(a).map_or(0.0, |it| it.eval(x))).powi(2)).sum::<f64>())
        .sum();
    Ok(s / ps.n() as f64)
}

/// One configuration's contribution to the scaling report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerfatySample {
    pub n: usize,
    pub f_n: f64,
    pub f_prime_n: f64,
    /// `‖∇u‖_∞`.
    pub grad_u_inf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerfatyRow {
    pub n: usize,
    pub samples: usize,
    pub max_abs_f_prime_n: f64,
    /// `max (F_N)_−` with `(F)_− = max(0, −F)`.
    pub max_f_n_negative: f64,
    /// `max (|F'_N| − C_fit‖∇u‖_∞F_N)`.
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerfatyReport {
    pub rows: Vec<SerfatyRow>,
    /// `(F_N)_− ~ N^a`; `None` when some `(F_N)_−` vanishes.
    pub a: Option<LinearFit>,
    /// Residual `~ N^b`; `None` when `F'_N` vanishes or residuals are not positive.
    pub b: Option<LinearFit>,
    /// Least-squares `C` in `|F'_N| ≈ C‖∇u‖_∞|F_N|`.
    pub c_fit: f64,
    pub a_within_bound: Option<bool>,
    pub b_within_bound: Option<bool>,
}

/// Largest exponents accepted for `a` and `b`.
pub const A_BOUND: f64 = 4.0 / 3.0 + 0.15;
pub const B_BOUND: f64 = 5.0 / 3.0 + 0.15;

/// Scaling report from precomputed functionals.
pub fn serfaty_report(samples: &[SerfatySample]) -> Result<SerfatyReport> {
    let mut ns: Vec<usize> = samples.iter().map(|s| s.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 || (ns[ns.len() - 1] as f64) < 10.0 * ns[0] as f64 {
        return Err(Error::Input(format!(
            "scaling fits need at least 3 values of N spanning a decade, got {ns:?}"
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for s in samples {
        let x = s.grad_u_inf * s.f_n.abs();
        num += x * s.f_prime_n.abs();
        den += x * x;
    }
    let c_fit = if den > 0.0 { num / den } else { 0.0 };
    let rows: Vec<SerfatyRow> = ns
        .iter()
        .map(|&n| {
            let group: Vec<&SerfatySample> = samples.iter().filter(|s| s.n == n).collect();
            let fold = |f: &dyn Fn(&SerfatySample) -> f64| group.iter().map(|s| f(s)).fold(f64::NEG_INFINITY, f64::max);
            SerfatyRow {
                n,
                samples: group.len(),
                max_abs_f_prime_n: fold(&|s| s.f_prime_n.abs()),
                max_f_n_negative: fold(&|s| (-s.f_n).max(0.0)),
                max_residual: fold(&|s| s.f_prime_n.abs() - c_fit * s.grad_u_inf * s.f_n),
            }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let neg: Vec<f64> = rows.iter().map(|r| r.max_f_n_negative).collect();
    let a = if neg.iter().all(|v| *v > 0.0) {
        Some(log_log_fit(&xs, &neg)?)
    } else {
        None
    };
    let res: Vec<f64> = rows.iter().map(|r| r.max_residual).collect();
    let any_f_prime = rows.iter().any(|r| r.max_abs_f_prime_n > 0.0);
    let b = if any_f_prime && res.iter().all(|v| *v > 0.0) {
        Some(log_log_fit(&xs, &res)?)
    } else {
        None
    };
    Ok(SerfatyReport {
        a_within_bound: a.map(|f| f.slope <= A_BOUND),
        b_within_bound: b.map(|f| f.slope <= B_BOUND),
        rows,
        a,
        b,
        c_fit,
    })
}

/// Scaling report over configurations `(X_N, ρ, u)`.
pub fn serfaty_diagnostics(samples: &[(ParticleSystem, ScalarField, VectorField)]) -> Result<SerfatyReport> {
    let evaluated = samples
        .iter()
        .map(|(ps, rho, u)| {
            let grad_u_inf = regularity_monitor(&FluidState::new(rho.clone(), u.clone())?, f64::INFINITY).grad_u_inf;
            Ok(SerfatySample {
                n: ps.n(),
                f_n: configuration_f_n(ps, rho)?,
                f_prime_n: configuration_f_prime_n(ps, rho, u)?,
                grad_u_inf,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    serfaty_report(&evaluated)
}
