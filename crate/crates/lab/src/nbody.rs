//! Classical particles sampled from the initial fluid data and evolved next
//! to the Euler-Poisson solution.

use std::io::Write;

use mfsc_core::ensemble::{
    configuration_f_prime_n, kinetic_modulated_particles, lattice_positions, sample_density, sample_wrapped_gaussian,
    velocities_from_field, BoundaryMode, MeanFieldProbe, NbodyIntegrator, ParticleSystem, SerfatySample,
};
use mfsc_core::euler::{regularity_monitor, wkb_initializer, EulerSolver, FluidState};
use mfsc_core::Error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::battery::{default_battery, weak_distances, TestFunction};
use crate::config::{cube_root, DensityProfile, ExperimentConfig, Sampler};
use crate::coupled::advance_fluid;
use crate::output::{fmt, Provenance, Table};
use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbodySample {
    pub time: f64,
    pub classical_energy: f64,
    /// `(1/N)Σ|v_j − u(x_j)|²`.
    pub kinetic_modulated: f64,
    pub f_n_over_n2: f64,
    pub total_modulated_per_particle: f64,
    pub min_pair_distance: f64,
    /// `|⟨μ − ρ, φ_m⟩|` over the test-function battery.
    pub battery: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRun {
    pub replica: usize,
    pub seed: u64,
    pub samples: Vec<NbodySample>,
    /// `F_N`, `F'_N` and `‖∇u‖_∞` of the initial configuration.
    pub initial: SerfatySample,
    /// Reason the series stopped early.
    pub truncated: Option<String>,
    /// Configuration at the last valid time of a truncated run.
    pub dump: Option<ParticleSystem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbodyRun {
    pub n: usize,
    pub battery: Vec<String>,
    pub replicas: Vec<ReplicaRun>,
    /// The fluid reference stopped early (flag or blow-up) at this time.
    pub fluid_horizon: Option<f64>,
}

/// Replica means of a per-sample quantity, at sample index `k`, over the
/// replicas that reached it.
impl NbodyRun {
    pub fn mean_at(&self, k: usize, f: impl Fn(&NbodySample) -> f64) -> Option<f64> {
        let v: Vec<f64> = self.replicas.iter().filter_map(|r| r.samples.get(k)).map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Index of the last sample reached by every replica.
    pub fn last_common(&self) -> Option<usize> {
        self.replicas.iter().map(|r| r.samples.len()).min().and_then(|l| l.checked_sub(1))
    }

    pub fn truncated(&self) -> bool {
        self.fluid_horizon.is_some() || self.replicas.iter().any(|r| r.truncated.is_some())
    }
}

/// Seed of replica `r` of the run with `n` particles.
pub fn replica_seed(seed: u64, n: usize, r: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ ((n as u64) << 20) ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fluid snapshots at the sampling times; stops early at a flag or failure.
fn fluid_series(cfg: &ExperimentConfig) -> Result<(Vec<FluidState>, Option<f64>), LabError> {
    let grid = cfg.nbody_grid()?;
    let rho = cfg.initial_rho(grid)?;
    let phase = cfg.initial_phase(grid);
    // the ħ of the WKB wave is irrelevant here, only the fluid is kept
    let (_, fluid) = wkb_initializer(&rho, &phase, 1.0)?;
    let options = cfg.euler_options();
    let mut solver = EulerSolver::new(fluid, options);
    let mut out = vec![solver.state().clone()];
    if let Some(t) = solver.flagged_at() {
        return Ok((out, Some(t)));
    }
    let steps = cfg.steps();
    for k in 1..=steps {
        let h = cfg.dt.min(cfg.t_final - solver.state().time);
        match advance_fluid(&mut solver, h, options.cfl) {
            Ok(()) => {}
            Err(Error::BlowUp { last_valid_time }) => return Ok((out, Some(last_valid_time))),
            Err(e) => return Err(e.into()),
        }
        if let Some(t) = solver.flagged_at() {
            return Ok((out, Some(t)));
        }
        if k % cfg.sample_every == 0 || k == steps {
            out.push(solver.state().clone());
        }
    }
    Ok((out, None))
}

/// Initial particle positions for one replica.
pub fn sample_positions(cfg: &ExperimentConfig, fluid: &FluidState, n: usize, seed: u64) -> Result<Vec<[f64; 3]>, LabError> {
    match (cfg.nbody.sampler, &cfg.initial_density) {
        (Sampler::Exact, DensityProfile::Gaussian { sigma, center }) => {
            Ok(sample_wrapped_gaussian(n, *center, *sigma, cfg.grid.box_length, seed))
        }
        (Sampler::Exact, DensityProfile::Uniform) => {
            Err(LabError::Config("the exact sampler needs a Gaussian density".into()))
        }
        (Sampler::Lattice, _) => match cube_root(n) {
            Some(m) => Ok(lattice_positions(m, cfg.grid.box_length)),
            None => Err(LabError::Config(format!("the lattice sampler needs a cube, got n = {n}"))),
        },
        (Sampler::Grid, _) => Ok(sample_density(&fluid.rho, n, cfg.nbody.sampler_refine, seed)?),
    }
}

struct Probe {
    fluid: FluidState,
    mean_field: MeanFieldProbe,
}

fn observe(
    integ: &NbodyIntegrator,
    probe: &Probe,
    battery: &[TestFunction],
) -> Result<NbodySample, LabError> {
    let ps = integ.system();
    let n = ps.n() as f64;
    let sums = integ.pair_sums();
    let f_n = probe.mean_field.f_n(ps, Some(sums.potential))?.total;
    let kinetic_modulated = kinetic_modulated_particles(ps, &probe.fluid.u)?;
    Ok(NbodySample {
        time: ps.time,
        classical_energy: integ.energy().total,
        kinetic_modulated,
        f_n_over_n2: f_n / (n * n),
        total_modulated_per_particle: kinetic_modulated + f_n / (n * n),
        min_pair_distance: sums.min_distance,
        battery: weak_distances(battery, &ps.positions, &probe.fluid.rho),
    })
}

fn run_replica(
    cfg: &ExperimentConfig,
    n: usize,
    replica: usize,
    probes: &[Probe],
    battery: &[TestFunction],
) -> Result<ReplicaRun, LabError> {
    let seed = replica_seed(cfg.seed, n, replica);
    let f0 = &probes[0].fluid;
    let positions = sample_positions(cfg, f0, n, seed)?;
    let velocities = velocities_from_field(&f0.u, &positions)?;
    let system = ParticleSystem::new(positions, velocities, cfg.grid.box_length, BoundaryMode::Periodic, seed)?;
    let initial = SerfatySample {
        n,
        f_n: probes[0].mean_field.f_n(&system, None)?.total,
        f_prime_n: configuration_f_prime_n(&system, &f0.rho, &f0.u)?,
        grad_u_inf: regularity_monitor(f0, f64::INFINITY).grad_u_inf,
    };
    let mut integ = match NbodyIntegrator::new(system.clone(), cfg.nbody_options()) {
        Ok(i) => i,
        Err(e @ Error::NearCollision { .. }) => {
            return Ok(ReplicaRun {
                replica,
                seed,
                samples: Vec::new(),
                initial,
                truncated: Some(e.to_string()),
                dump: Some(system),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let mut samples = vec![observe(&integ, &probes[0], battery)?];
    let mut truncated = None;
    let mut dump = None;
    'outer: for probe in &probes[1..] {
        // the fluid snapshots sit on multiples of dt, sampled every few steps
        while integ.system().time < probe.fluid.time - 1e-12 * cfg.t_final {
            let h = cfg.dt.min(probe.fluid.time - integ.system().time);
            let before = integ.system().clone();
            match integ.advance(h) {
                Ok(()) => {}
                Err(e @ Error::NearCollision { .. }) => {
                    truncated = Some(e.to_string());
                    dump = Some(before);
                    break 'outer;
                }
                Err(e) => return Err(e.into()),
            }
        }
        samples.push(observe(&integ, probe, battery)?);
    }
    Ok(ReplicaRun {
        replica,
        seed,
        samples,
        initial,
        truncated,
        dump,
    })
}

/// `cfg.nbody.replicas` independent samples of `n` particles, each evolved
/// to `t_final` (or to the fluid horizon) and compared with the fluid at the
/// sampling times.
pub fn run_nbody_vs_fluid(cfg: &ExperimentConfig, n: usize) -> Result<NbodyRun, LabError> {
    if n < 2 {
        return Err(LabError::Config(format!("need at least two particles, got {n}")));
    }
    if !cfg.modes.images {
        return Err(LabError::Config("N-body runs against a fluid need periodic images".into()));
    }
    let (fluid, fluid_horizon) = fluid_series(cfg)?;
    let probes = fluid
        .into_iter()
        .map(|f| {
            let mean_field = MeanFieldProbe::new(&f.rho)?;
            Ok(Probe { fluid: f, mean_field })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let battery = default_battery();
    let replicas = (0..cfg.nbody.replicas)
        .into_par_iter()
        .map(|r| run_replica(cfg, n, r, &probes, &battery))
        .collect::<Result<Vec<_>, LabError>>()?;
    Ok(NbodyRun {
        n,
        battery: battery.iter().map(|f| f.name()).collect(),
        replicas,
        fluid_horizon,
    })
}

pub const NBODY_COLUMNS: [&str; 9] = [
    "n",
    "replica",
    "seed",
    "time",
    "classical_energy",
    "kinetic_modulated",
    "f_n_over_n2",
    "total_modulated_per_particle",
    "min_pair_distance",
];

pub fn write_nbody<W: Write>(out: W, provenance: Provenance, run: &NbodyRun) -> Result<(), LabError> {
    let names: Vec<String> = run.battery.iter().map(|b| format!("battery_{b}")).collect();
    let columns: Vec<&str> = NBODY_COLUMNS.iter().copied().chain(names.iter().map(|s| s.as_str())).collect();
    let mut t = Table::new(out, provenance, &columns)?;
    for r in &run.replicas {
        for s in &r.samples {
            let mut row = vec![
                run.n.to_string(),
                r.replica.to_string(),
                r.seed.to_string(),
                fmt(s.time),
                fmt(s.classical_energy),
                fmt(s.kinetic_modulated),
                fmt(s.f_n_over_n2),
                fmt(s.total_modulated_per_particle),
                fmt(s.min_pair_distance),
            ];
            row.extend(s.battery.iter().map(|&v| fmt(v)));
            t.row(&row)?;
        }
    }
    t.finish()
}
