use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mfsc_core::diagnostics::{factorized_modulated_energy, g_functional};
use mfsc_core::euler::{fluid_energy, fluid_mass, fluid_momentum, regularity_monitor, wkb_initializer, EulerSolver, FluidState};
use mfsc_core::hartree::{fourth_moment, hartree_energy, HartreeOptions, HartreeSolver, HartreeState};
use mfsc_core::phase_space::{default_xi_points, husimi_transform, wigner_transform};
use mfsc_lab::config::content_hash;
use mfsc_lab::coupled::advance_fluid;
use mfsc_lab::kernels_check::{kernel_checks, write_kernel_checks};
use mfsc_lab::nbody::{run_nbody_vs_fluid, write_nbody};
use mfsc_lab::output::{create_table, fmt, read_json, write_json, Provenance, Table};
use mfsc_lab::sweep::{report_text, sweep, write_sweep};
use mfsc_lab::{ExperimentConfig, LabError};

#[derive(Parser)]
#[command(
    name = "lab",
    version,
    about = "Mean-field and semiclassical limit experiments",
    after_help = "Sweep workers are set by LAB_WORKERS. Exit codes: 0 gates passed, 1 numerical gate failure, 2 configuration error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coupled runs for every hbar and N-body runs for every N, with rate fits.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` of the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Hartree evolution alone; writes hartree.csv and psi_final.json.
    HartreeRun {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the first entry of hbar_list.
        #[arg(long)]
        hbar: Option<f64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Largest relative energy drift accepted.
        #[arg(long, default_value_t = 1e-6)]
        energy_tol: f64,
    },
    /// Euler-Poisson evolution alone; writes euler.csv and fluid_final.json.
    EulerRun {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Particles against the fluid for one N; writes nbody_n<N>.csv.
    NbodyRun {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the first entry of n_list.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Kernel identity checks as CSV on stdout.
    CheckKernels,
    /// Modulated energy of a saved wave function against a saved fluid state.
    Diagnose {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        fluid: PathBuf,
        /// Also report the factorized energy for this particle number.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Wigner and Husimi functions of a saved 1-D wave function as CSV.
    Wigner {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        xi_points: Option<usize>,
    },
}

/// Whether every numerical gate of the command passed.
type Gates = bool;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cmd: Command) -> Result<Gates, LabError> {
    match cmd {
        Command::Sweep { config, output_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = output_dir.unwrap_or_else(|| cfg.output_dir.clone());
            let result = sweep(&cfg)?;
            write_sweep(&result, &dir)?;
            print!("{}", report_text(&result));
            Ok(result.passed())
        }
        Command::HartreeRun {
            config,
            hbar,
            output_dir,
            energy_tol,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let hbar = hbar
                .or_else(|| cfg.hbar_list.first().copied())
                .ok_or_else(|| LabError::Config("no hbar given and hbar_list is empty".into()))?;
            hartree_run(&cfg, hbar, &output_dir.unwrap_or_else(|| cfg.output_dir.clone()), energy_tol)
        }
        Command::EulerRun { config, output_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            euler_run(&cfg, &output_dir.unwrap_or_else(|| cfg.output_dir.clone()))
        }
        Command::NbodyRun { config, n, output_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let n = n
                .or_else(|| cfg.n_list.first().copied())
                .ok_or_else(|| LabError::Config("no n given and n_list is empty".into()))?;
            let dir = output_dir.unwrap_or_else(|| cfg.output_dir.clone());
            std::fs::create_dir_all(&dir)?;
            let run = run_nbody_vs_fluid(&cfg, n)?;
            let hash = cfg.hash();
            let f = std::fs::File::create(dir.join(format!("nbody_n{n}.csv")))?;
            write_nbody(f, Provenance::new(format!("{hash}-n{n}"), hash.clone()), &run)?;
            for r in &run.replicas {
                if let Some(d) = &r.dump {
                    write_json(&dir.join(format!("nbody_n{n}_replica{}_dump.json", r.replica)), d)?;
                    eprintln!("replica {}: {}", r.replica, r.truncated.as_deref().unwrap_or(""));
                }
            }
            Ok(!run.truncated())
        }
        Command::CheckKernels => {
            let checks = kernel_checks()?;
            let prov = Provenance::new("check-kernels", content_hash(b"check-kernels"));
            write_kernel_checks(std::io::stdout().lock(), prov, &checks)?;
            Ok(checks.iter().all(|c| c.passed()))
        }
        Command::Diagnose { state, fluid, n } => diagnose(&state, &fluid, n),
        Command::Wigner { state, xi_points } => wigner(&state, xi_points),
    }
}

fn hartree_run(cfg: &ExperimentConfig, hbar: f64, dir: &Path, energy_tol: f64) -> Result<Gates, LabError> {
    std::fs::create_dir_all(dir)?;
    let grid = cfg.grid_spec();
    let (psi, _) = wkb_initializer(&cfg.initial_rho(grid)?, &cfg.initial_phase(grid), hbar)?;
    let options = HartreeOptions {
        coupling: 1.0,
        self_consistent_half: cfg.modes.self_consistent_halves,
    };
    let mut solver = HartreeSolver::new(HartreeState::new(psi), options)?;
    let hash = cfg.hash();
    let mut t = create_table(
        &dir.join("hartree.csv"),
        Provenance::new(format!("{hash}-hartree"), hash.clone()),
        &["hbar", "time", "mass", "kinetic", "potential", "total_energy", "fourth_moment"],
    )?;
    let e0 = hartree_energy(solver.state());
    let m0 = solver.state().psi.norm_sqr();
    let mut worst_mass: f64 = 0.0;
    let mut worst_energy: f64 = 0.0;
    let steps = cfg.steps();
    for k in 0..=steps {
        if k > 0 {
            let h = cfg.dt.min(cfg.t_final - solver.state().time);
            solver.step(h)?;
        }
        if k % cfg.sample_every == 0 || k == steps {
            let s = solver.state();
            let e = hartree_energy(s);
            let m = s.psi.norm_sqr();
            worst_mass = worst_mass.max((m - m0).abs());
            worst_energy = worst_energy.max(((e.total - e0.total) / e0.total.abs().max(1e-300)).abs());
            t.row(&[
                fmt(hbar),
                fmt(s.time),
                fmt(m),
                fmt(e.kinetic),
                fmt(e.potential),
                fmt(e.total),
                fmt(fourth_moment(&s.psi)),
            ])?;
        }
    }
    t.finish()?;
    write_json(&dir.join("psi_final.json"), solver.state())?;
    eprintln!("mass drift {worst_mass:e}, relative energy drift {worst_energy:e}");
    Ok(worst_mass <= 1e-9 && worst_energy <= energy_tol)
}

fn euler_run(cfg: &ExperimentConfig, dir: &Path) -> Result<Gates, LabError> {
    std::fs::create_dir_all(dir)?;
    let grid = cfg.grid_spec();
    let u = cfg.initial_velocity(grid)?;
    let options = cfg.euler_options();
    let mut solver = EulerSolver::new(FluidState::new(cfg.initial_rho(grid)?, u)?, options);
    let hash = cfg.hash();
    let mut t = create_table(
        &dir.join("euler.csv"),
        Provenance::new(format!("{hash}-euler"), hash.clone()),
        &[
            "time",
            "mass",
            "momentum_x",
            "momentum_y",
            "momentum_z",
            "kinetic",
            "potential",
            "total_energy",
            "grad_u_inf",
            "laplacian_div_u_inf",
            "rho_inf",
            "blow_up_flag",
        ],
    )?;
    let write = |t: &mut Table<std::fs::File>, s: &FluidState| {
        let e = fluid_energy(s);
        let p = fluid_momentum(s);
        let m = regularity_monitor(s, options.blow_up_threshold);
        t.row(&[
            fmt(s.time),
            fmt(fluid_mass(s)),
            fmt(p[0]),
            fmt(p[1]),
            fmt(p[2]),
            fmt(e.kinetic),
            fmt(e.potential),
            fmt(e.total),
            fmt(m.grad_u_inf),
            fmt(m.laplacian_div_u_inf),
            fmt(m.rho_inf),
            m.blow_up_flag.to_string(),
        ])
    };
    let m0 = fluid_mass(solver.state());
    write(&mut t, solver.state())?;
    let steps = cfg.steps();
    let mut ok = solver.flagged_at().is_none();
    for k in 1..=steps {
        if !ok {
            break;
        }
        let h = cfg.dt.min(cfg.t_final - solver.state().time);
        match advance_fluid(&mut solver, h, options.cfl) {
            Ok(()) => {}
            Err(mfsc_core::Error::BlowUp { last_valid_time }) => {
                eprintln!("fluid blew up after t = {last_valid_time}");
                ok = false;
                break;
            }
            Err(e) => return Err(e.into()),
        }
        if let Some(tf) = solver.flagged_at() {
            eprintln!("regularity monitor flagged the solution at t = {tf}");
            ok = false;
        }
        if k % cfg.sample_every == 0 || k == steps || !ok {
            write(&mut t, solver.state())?;
        }
    }
    t.finish()?;
    write_json(&dir.join("fluid_final.json"), solver.state())?;
    let drift = (fluid_mass(solver.state()) - m0).abs() / m0;
    eprintln!("relative mass drift {drift:e}");
    Ok(ok && drift <= 1e-10)
}

fn file_hash(paths: &[&Path]) -> Result<String, LabError> {
    let mut bytes = Vec::new();
    for p in paths {
        bytes.extend(std::fs::read(p).map_err(|e| LabError::Config(format!("cannot read {}: {e}", p.display())))?);
    }
    Ok(content_hash(&bytes))
}

fn diagnose(state: &Path, fluid: &Path, n: Option<usize>) -> Result<Gates, LabError> {
    let hs: HartreeState = read_json(state)?;
    let fs: FluidState = read_json(fluid)?;
    let report = match n {
        Some(n) => factorized_modulated_energy(&hs.psi, &fs, n)?,
        None => g_functional(&hs.psi, &fs)?,
    };
    let prov = Provenance::new("diagnose", file_hash(&[state, fluid])?);
    let mut t = Table::new(
        std::io::stdout().lock(),
        prov,
        &["time", "hbar", "diagnostic", "value"],
    )?;
    let mut row = |name: &str, v: f64| t.row(&[fmt(hs.time), fmt(hs.psi.hbar), name.to_string(), fmt(v)]);
    row("g_total", report.g_total)?;
    row("kinetic_modulated", report.kinetic_modulated)?;
    row("potential_gap", report.potential_gap)?;
    for (k, v) in &report.extra_terms {
        row(k, *v)?;
    }
    t.finish()?;
    Ok(report.g_total.is_finite())
}

fn wigner(state: &Path, xi_points: Option<usize>) -> Result<Gates, LabError> {
    let hs: HartreeState = read_json(state)?;
    let psi = &hs.psi;
    if psi.grid.dim() != 1 {
        return Err(LabError::Config("the Wigner transform is one-dimensional".into()));
    }
    let w = wigner_transform(psi, xi_points.unwrap_or_else(|| default_xi_points(psi)))?;
    let h = husimi_transform(&w);
    let prov = Provenance::new("wigner", file_hash(&[state])?);
    let mut t = Table::new(std::io::stdout().lock(), prov, &["x", "xi", "w", "w_husimi"])?;
    for i in 0..w.x_points() {
        let x = w.x_grid.coordinate(i);
        for j in 0..w.xi_points {
            t.row(&[fmt(x), fmt(w.xi(j)), fmt(w.at(i, j)), fmt(h.at(i, j))])?;
        }
    }
    t.finish()?;
    Ok(true)
}
