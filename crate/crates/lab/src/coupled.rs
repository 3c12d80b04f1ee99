//! Hartree and Euler-Poisson evolved side by side from matched WKB data.

use std::io::Write;

use mfsc_core::diagnostics::{g_functional, gronwall_monitor, GronwallCheck, ModulatedEnergyReport};
use mfsc_core::euler::{cfl_bound, wkb_initializer, EulerSolver, FluidState, RegularityMonitor};
use mfsc_core::hartree::{continuity_residual, fourth_moment, HartreeOptions, HartreeSolver, HartreeState};
use mfsc_core::phase_space::{default_xi_points, husimi_transform, monokinetic_concentration, wigner_transform};
use mfsc_core::Error;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::output::{fmt, fmt_opt, Provenance, Table};
use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledSample {
    pub report: ModulatedEnergyReport,
    /// Centred continuity residual from a step back and a step forward.
    pub continuity_residual: f64,
    /// One-dimensional runs only.
    pub monokinetic: Option<f64>,
    pub fourth_moment: f64,
    pub monitor: RegularityMonitor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledRun {
    pub hbar: f64,
    pub samples: Vec<CoupledSample>,
    /// Time at which the fluid was flagged or failed; `None` when `t_final` was reached.
    pub horizon: Option<f64>,
    pub stop_reason: Option<String>,
    pub gronwall: GronwallCheck,
    pub hartree: HartreeState,
    pub fluid: FluidState,
}

impl CoupledRun {
    pub fn completed(&self) -> bool {
        self.horizon.is_none()
    }

    pub fn last(&self) -> Option<&CoupledSample> {
        self.samples.last()
    }
}

/// Advances the fluid by `dt` in CFL-admissible substeps.
pub fn advance_fluid(solver: &mut EulerSolver, dt: f64, cfl: f64) -> mfsc_core::Result<()> {
    let target = solver.state().time + dt;
    loop {
        let remaining = target - solver.state().time;
        if remaining <= 1e-12 * dt.max(1.0) {
            return Ok(());
        }
        let bound = cfl_bound(solver.state(), cfl);
        let h = if remaining <= bound {
            remaining
        } else {
            remaining / (remaining / bound).ceil()
        };
        solver.step(h.min(bound))?;
    }
}

fn sample(hartree: &HartreeSolver, fluid: &EulerSolver, dt: f64) -> Result<CoupledSample, LabError> {
    let psi = &hartree.state().psi;
    let report = g_functional(psi, fluid.state())?;
    let mut back = hartree.clone();
    back.step(-dt)?;
    let mut fwd = hartree.clone();
    fwd.step(dt)?;
    let states = [back.into_state(), hartree.state().clone(), fwd.into_state()];
    let continuity_residual = continuity_residual(&states)?;
    let monokinetic = if psi.grid.dim() == 1 {
        let w = wigner_transform(psi, default_xi_points(psi))?;
        Some(monokinetic_concentration(&husimi_transform(&w), fluid.state())?)
    } else {
        None
    };
    Ok(CoupledSample {
        report,
        continuity_residual,
        monokinetic,
        fourth_moment: fourth_moment(psi),
        monitor: *fluid.monitor(),
    })
}

/// Evolves both descriptions to `t_final`, sampling every `sample_every`
/// steps and at the last step. A fluid blow-up flag or failure ends the run
/// early with the horizon recorded; the state at the flag is not sampled.
pub fn run_coupled(cfg: &ExperimentConfig, hbar: f64) -> Result<CoupledRun, LabError> {
    if !(hbar > 0.0) {
        return Err(LabError::Config(format!("hbar must be positive, got {hbar}")));
    }
    let grid = cfg.grid_spec();
    let rho = cfg.initial_rho(grid)?;
    let phase = cfg.initial_phase(grid);
    let (psi, fluid) = wkb_initializer(&rho, &phase, hbar)?;
    let options = HartreeOptions {
        coupling: 1.0,
        self_consistent_half: cfg.modes.self_consistent_halves,
    };
    let mut hartree = HartreeSolver::new(HartreeState::new(psi), options)?;
    let euler_options = cfg.euler_options();
    let mut euler = EulerSolver::new(fluid, euler_options);

    let mut samples = Vec::new();
    let mut horizon = None;
    let mut stop_reason = None;
    let steps = cfg.steps();
    if let Some(t) = euler.flagged_at() {
        horizon = Some(t);
        stop_reason = Some("initial data flagged by the regularity monitor".to_string());
    } else {
        samples.push(sample(&hartree, &euler, cfg.dt)?);
    }
    for k in 1..=steps {
        if horizon.is_some() {
            break;
        }
        let t = hartree.state().time;
        let h = cfg.dt.min(cfg.t_final - t);
        match advance_fluid(&mut euler, h, euler_options.cfl) {
            Ok(()) => {}
            Err(Error::BlowUp { last_valid_time }) => {
                horizon = Some(last_valid_time);
                stop_reason = Some("fluid blow-up".to_string());
                break;
            }
            Err(e) => return Err(e.into()),
        }
        if let Some(tf) = euler.flagged_at() {
            horizon = Some(tf);
            stop_reason = Some("regularity monitor flag".to_string());
            break;
        }
        match hartree.step(h) {
            Ok(()) => {}
            Err(Error::BlowUp { last_valid_time }) => {
                horizon = Some(last_valid_time);
                stop_reason = Some("Hartree blow-up".to_string());
                break;
            }
            Err(e) => return Err(e.into()),
        }
        if k % cfg.sample_every == 0 || k == steps {
            samples.push(sample(&hartree, &euler, cfg.dt)?);
        }
    }

    let mut reports: Vec<ModulatedEnergyReport> = samples.iter().map(|s| s.report.clone()).collect();
    let monitors: Vec<RegularityMonitor> = samples.iter().map(|s| s.monitor).collect();
    let gronwall = gronwall_monitor(&mut reports, &monitors, cfg.gronwall_c)?;
    for (s, r) in samples.iter_mut().zip(reports) {
        s.report = r;
    }
    Ok(CoupledRun {
        hbar,
        samples,
        horizon,
        stop_reason,
        gronwall,
        hartree: hartree.into_state(),
        fluid: euler.state().clone(),
    })
}

pub const COUPLED_COLUMNS: [&str; 13] = [
    "hbar",
    "time",
    "g_total",
    "kinetic_modulated",
    "potential_gap",
    "gronwall_envelope",
    "continuity_residual",
    "monokinetic_concentration",
    "fourth_moment",
    "grad_u_inf",
    "laplacian_div_u_inf",
    "rho_inf",
    "blow_up_flag",
];

pub fn write_coupled<W: Write>(out: W, provenance: Provenance, run: &CoupledRun) -> Result<(), LabError> {
    let mut t = Table::new(out, provenance, &COUPLED_COLUMNS)?;
    for s in &run.samples {
        t.row(&[
            fmt(run.hbar),
            fmt(s.report.time),
            fmt(s.report.g_total),
            fmt(s.report.kinetic_modulated),
            fmt(s.report.potential_gap),
            fmt_opt(s.report.gronwall_envelope),
            fmt(s.continuity_residual),
            fmt_opt(s.monokinetic),
            fmt(s.fourth_moment),
            fmt(s.monitor.grad_u_inf),
            fmt(s.monitor.laplacian_div_u_inf),
            fmt(s.monitor.rho_inf),
            s.monitor.blow_up_flag.to_string(),
        ])?;
    }
    t.finish()
}
