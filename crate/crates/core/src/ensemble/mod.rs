//! Classical N-particle mean-field Coulomb dynamics and the Serfaty
//! functionals of a particle configuration relative to a fluid state.

mod functionals;
mod sampling;

pub use functionals::{
    configuration_energy, configuration_f_n, configuration_f_prime_n, f_prime_terms, kinetic_modulated_particles,
    serfaty_diagnostics, serfaty_report, ConfigurationEnergy, FnTerms, MeanFieldProbe, SerfatyReport, SerfatyRow,
    SerfatySample, A_BOUND, B_BOUND,
};
pub use sampling::{lattice_positions, sample_density, sample_wrapped_gaussian, velocities_from_field};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::PairKernel;

/// Interaction geometry for the particle code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Bare Coulomb kernel, no images, no wrapping.
    FreeSpace,
    /// Periodic box with neutralizing background.
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSystem {
    pub positions: Vec<[f64; 3]>,
    pub velocities: Vec<[f64; 3]>,
    pub time: f64,
    pub seed: u64,
    pub box_length: f64,
    pub mode: BoundaryMode,
}

impl ParticleSystem {
    pub fn new(
        positions: Vec<[f64; 3]>,
        velocities: Vec<[f64; 3]>,
        box_length: f64,
        mode: BoundaryMode,
        seed: u64,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Input("a particle system needs at least one particle".into()));
        }
        if positions.len() != velocities.len() {
            return Err(Error::SizeMismatch {
                expected: positions.len(),
                got: velocities.len(),
            });
        }
        if !(box_length > 0.0) {
            return Err(Error::Config(format!("box length must be positive, got {box_length}")));
        }
        if positions.iter().chain(&velocities).flatten().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite particle coordinate".into()));
        }
        let mut ps = Self {
            positions,
            velocities,
            time: 0.0,
            seed,
            box_length,
            mode,
        };
        ps.wrap_positions();
        Ok(ps)
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn kernel(&self) -> PairKernel {
        match self.mode {
            BoundaryMode::FreeSpace => PairKernel::FreeSpace,
            BoundaryMode::Periodic => PairKernel::periodic(self.box_length),
        }
    }

    fn wrap_positions(&mut self) {
        if self.mode == BoundaryMode::Periodic {
            let l = self.box_length;
            for p in &mut self.positions {
                for x in p.iter_mut() {
                    let y = (*x + 0.5 * l).rem_euclid(l) - 0.5 * l;
                    *x = if y >= 0.5 * l { y - l } else { y };
                }
            }
        }
    }

    /// Smallest pair distance (minimum image in periodic mode) and its pair.
    pub fn min_pair_distance(&self) -> (f64, usize, usize) {
        let kernel = self.kernel();
        let n = self.n();
        (0..n)
            .into_par_iter()
            .map(|j| {
                let mut best = (f64::INFINITY, j, j);
                for k in j + 1..n {
                    let d = kernel.distance(sub(self.positions[j], self.positions[k]));
                    if d < best.0 {
                        best = (d, j, k);
                    }
                }
                best
            })
            .reduce(|| (f64::INFINITY, 0, 0), |a, b| if b.0 < a.0 { b } else { a })
    }
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Rows of the pair triangle handled by one reduction block. Fixed so that
/// results do not depend on the number of worker threads.
const ROW_BLOCK: usize = 32;

/// Pair sums of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSums {
    /// `Σ_{j<k} G(x_j − x_k)`.
    pub potential: f64,
    /// `F_j = −(1/N) Σ_{k≠j} ∇G(x_j − x_k)`.
    pub forces: Vec<[f64; 3]>,
    pub min_distance: f64,
}

struct Block {
    potential: f64,
    forces: Vec<[f64; 3]>,
    min: (f64, usize, usize),
}

/// Potential, forces and minimum distance in one pass over the pairs.
pub fn pair_interactions(ps: &ParticleSystem) -> Result<PairSums> {
    let kernel = ps.kernel();
    let n = ps.n();
    let x = &ps.positions;
    let limit = 1e-10 * ps.box_length;
    let blocks: Vec<Block> = (0..n.div_ceil(ROW_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut blk = Block {
                potential: 0.0,
                forces: vec![[0.0; 3]; n],
                min: (f64::INFINITY, 0, 0),
            };
            for j in b * ROW_BLOCK..((b + 1) * ROW_BLOCK).min(n) {
                for k in j + 1..n {
                    let d = sub(x[j], x[k]);
                    let r = kernel.distance(d);
                    if r < blk.min.0 {
                        blk.min = (r, j, k);
                    }
                    if r < limit {
                        continue;
                    }
                    let (v, g) = kernel.value_gradient(d).expect("separation checked above");
                    blk.potential += v;
                    for a in 0..3 {
                        blk.forces[j][a] -= g[a];
                        blk.forces[k][a] += g[a];
                    }
                }
            }
            blk
        })
        .collect();
    let mut potential = 0.0;
    let mut forces = vec![[0.0; 3]; n];
    let mut min = (f64::INFINITY, 0, 0);
    for blk in &blocks {
        potential += blk.potential;
        for (f, g) in forces.iter_mut().zip(&blk.forces) {
            for a in 0..3 {
                f[a] += g[a];
            }
        }
        if blk.min.0 < min.0 {
            min = blk.min;
        }
    }
    if min.0 < limit {
        return Err(Error::NearCollision {
            i: min.1,
            j: min.2,
            distance: min.0,
            time: ps.time,
        });
    }
    let inv_n = 1.0 / n as f64;
    for f in &mut forces {
        for c in f.iter_mut() {
            *c *= inv_n;
        }
    }
    Ok(PairSums {
        potential,
        forces,
        min_distance: min.0,
    })
}

/// `F_j = −(1/N) Σ_{k≠j} ∇G(x_j − x_k)`.
pub fn mean_field_forces(ps: &ParticleSystem) -> Result<Vec<[f64; 3]>> {
    pair_interactions(ps).map(|s| s.forces)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbodyOptions {
    /// Largest step ever taken.
    pub dt_max: f64,
    /// `c` in the guard `dt ≤ c·√(N/|coupling|)·d_min^{3/2}`.
    pub guard_constant: f64,
    /// Sign and strength of the interaction; `1` is Coulomb repulsion.
    pub coupling: f64,
}

impl Default for NbodyOptions {
    fn default() -> Self {
        Self {
            dt_max: 0.05,
            guard_constant: 0.05,
            coupling: 1.0,
        }
    }
}

impl NbodyOptions {
    /// Step bound for a configuration with smallest pair distance `d_min`.
    /// A pair at distance `d` with interaction `1/N` has dynamical time
    /// `∝ √(N d³)`.
    pub fn guard(&self, n: usize, d_min: f64) -> f64 {
        let g = self.guard_constant * (n as f64 / self.coupling.abs().max(1e-300)).sqrt() * d_min.powf(1.5);
        self.dt_max.min(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalEnergy {
    /// `½ Σ|v_j|²`.
    pub kinetic: f64,
    /// `(coupling/N) Σ_{j<k} G`.
    pub interaction: f64,
    pub total: f64,
}

fn energy_from(ps: &ParticleSystem, potential: f64, coupling: f64) -> ClassicalEnergy {
    let kinetic = 0.5
        * ps.velocities
            .iter()
            .map(|v| v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
            .sum::<f64>();
    let interaction = coupling * potential / ps.n() as f64;
    ClassicalEnergy {
        kinetic,
        interaction,
        total: kinetic + interaction,
    }
}

/// Hamiltonian of the velocity-Verlet dynamics.
pub fn classical_energy(ps: &ParticleSystem, coupling: f64) -> Result<ClassicalEnergy> {
    let s = pair_interactions(ps)?;
    Ok(energy_from(ps, s.potential, coupling))
}

fn verlet(ps: &ParticleSystem, forces: &[[f64; 3]], dt: f64, coupling: f64) -> Result<(ParticleSystem, PairSums)> {
    let mut next = ps.clone();
    let h = 0.5 * dt * coupling;
    for ((x, v), f) in next.positions.iter_mut().zip(next.velocities.iter_mut()).zip(forces) {
        for a in 0..3 {
            v[a] += h * f[a];
            x[a] += dt * v[a];
        }
    }
    next.wrap_positions();
    next.time += dt;
    let sums = pair_interactions(&next)?;
    for (v, f) in next.velocities.iter_mut().zip(&sums.forces) {
        for a in 0..3 {
            v[a] += h * f[a];
        }
    }
    Ok((next, sums))
}

/// One velocity-Verlet step. `Err(StepSize)` when `dt` exceeds the guard.
pub fn nbody_step(ps: &ParticleSystem, dt: f64, options: &NbodyOptions) -> Result<ParticleSystem> {
    let sums = pair_interactions(ps)?;
    let bound = options.guard(ps.n(), sums.min_distance);
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, bound });
    }
    verlet(ps, &sums.forces, dt, options.coupling).map(|(p, _)| p)
}

/// Velocity-Verlet integrator that caches forces between steps and splits
/// requested intervals into guarded substeps.
#[derive(Debug, Clone)]
pub struct NbodyIntegrator {
    system: ParticleSystem,
    sums: PairSums,
    options: NbodyOptions,
    substeps: usize,
}

impl NbodyIntegrator {
    pub fn new(system: ParticleSystem, options: NbodyOptions) -> Result<Self> {
        if !(options.dt_max > 0.0) || !(options.guard_constant > 0.0) {
            return Err(Error::Config("N-body step bounds must be positive".into()));
        }
        let sums = pair_interactions(&system)?;
        Ok(Self {
            system,
            sums,
            options,
            substeps: 0,
        })
    }

    pub fn system(&self) -> &ParticleSystem {
        &self.system
    }

    pub fn pair_sums(&self) -> &PairSums {
        &self.sums
    }

    /// Total number of Verlet steps taken so far.
    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn energy(&self) -> ClassicalEnergy {
        energy_from(&self.system, self.sums.potential, self.options.coupling)
    }

    /// Advance by exactly `dt`, in equal substeps no longer than the guard.
    pub fn advance(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::StepSize { dt, bound: 0.0 });
        }
        let target = self.system.time + dt;
        let mut remaining = dt;
        while remaining > 1e-14 * dt.max(1.0) {
            let bound = self.options.guard(self.system.n(), self.sums.min_distance);
            let pieces = (remaining / bound).ceil().max(1.0);
            let h = remaining / pieces;
            let (next, sums) = verlet(&self.system, &self.sums.forces, h, self.options.coupling)?;
            self.system = next;
            self.sums = sums;
            self.substeps += 1;
            remaining -= h;
        }
        self.system.time = target;
        Ok(())
    }
}
