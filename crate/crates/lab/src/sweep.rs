//! Parameter sweeps over ħ and N, log-log rate fits and the sweep report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use mfsc_core::ensemble::{serfaty_report, SerfatyReport, SerfatySample, A_BOUND};
use mfsc_core::stats::{log_log_fit, LinearFit};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::coupled::{run_coupled, write_coupled, CoupledRun};
use crate::nbody::{run_nbody_vs_fluid, write_nbody, NbodyRun};
use crate::output::{create_table, fmt, write_json, Provenance};
use crate::{worker_count, LabError};

/// One terminal-time diagnostic of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub run_id: String,
    /// `"hbar"` or `"n"`.
    pub parameter: String,
    pub value: f64,
    pub time: f64,
    pub diagnostic: String,
    pub diagnostic_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedRate {
    pub fit: LinearFit,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub run_id: String,
    pub parameter: String,
    pub value: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config_hash: String,
    pub rows: Vec<SweepRow>,
    pub fitted_rates: BTreeMap<String, FittedRate>,
    pub failures: Vec<Failure>,
    pub gates: Vec<Gate>,
    pub serfaty: Option<SerfatyReport>,
    pub coupled: Vec<(String, CoupledRun)>,
    pub nbody: Vec<(String, NbodyRun)>,
}

impl SweepResult {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn gate(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }
}

enum Task {
    Coupled(usize, f64),
    Nbody(usize),
}

enum Outcome {
    Coupled(Result<CoupledRun, LabError>),
    Nbody(Result<NbodyRun, LabError>),
}

pub fn coupled_run_id(hash: &str, i: usize) -> String {
    format!("{hash}-hbar{i}")
}

pub fn nbody_run_id(hash: &str, n: usize) -> String {
    format!("{hash}-n{n}")
}

fn check_lists(cfg: &ExperimentConfig) -> Result<(), LabError> {
    if cfg.hbar_list.is_empty() && cfg.n_list.is_empty() {
        return Err(LabError::Config("a sweep needs hbar_list or n_list".into()));
    }
    for (name, len) in [("hbar_list", cfg.hbar_list.len()), ("n_list", cfg.n_list.len())] {
        if len > 0 && len < 3 {
            return Err(LabError::Config(format!("{name} needs at least 3 values to fit a rate, got {len}")));
        }
    }
    Ok(())
}

/// Runs every ħ and every N on a pool of `LAB_WORKERS` threads. Failed
/// runs are listed in `failures`; the remaining results are still fitted.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepResult, LabError> {
    check_lists(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| LabError::Config(e.to_string()))?;
    let tasks: Vec<Task> = cfg
        .hbar_list
        .iter()
        .enumerate()
        .map(|(i, &h)| Task::Coupled(i, h))
        .chain(cfg.n_list.iter().map(|&n| Task::Nbody(n)))
        .collect();
    let outcomes: Vec<Outcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| match *t {
                Task::Coupled(_, h) => Outcome::Coupled(run_coupled(cfg, h)),
                Task::Nbody(n) => Outcome::Nbody(run_nbody_vs_fluid(cfg, n)),
            })
            .collect()
    });
    let hash = cfg.hash();
    let mut result = SweepResult {
        config_hash: hash.clone(),
        rows: Vec::new(),
        fitted_rates: BTreeMap::new(),
        failures: Vec::new(),
        gates: Vec::new(),
        serfaty: None,
        coupled: Vec::new(),
        nbody: Vec::new(),
    };
    for (task, outcome) in tasks.iter().zip(outcomes) {
        match (task, outcome) {
            (Task::Coupled(i, h), Outcome::Coupled(r)) => {
                let id = coupled_run_id(&hash, *i);
                match r {
                    Ok(run) => result.coupled.push((id, run)),
                    Err(e) => result.failures.push(Failure {
                        run_id: id,
                        parameter: "hbar".into(),
                        value: *h,
                        error: e.to_string(),
                    }),
                }
            }
            (Task::Nbody(n), Outcome::Nbody(r)) => {
                let id = nbody_run_id(&hash, *n);
                match r {
                    Ok(run) => result.nbody.push((id, run)),
                    Err(e) => result.failures.push(Failure {
                        run_id: id,
                        parameter: "n".into(),
                        value: *n as f64,
                        error: e.to_string(),
                    }),
                }
            }
            _ => unreachable!("outcomes are collected in task order"),
        }
    }
    summarize_coupled(cfg, &mut result);
    summarize_nbody(&mut result);
    result.gates.insert(
        0,
        Gate {
            name: "runs_completed".into(),
            passed: result.failures.is_empty(),
            detail: format!("{} failed runs", result.failures.len()),
        },
    );
    Ok(result)
}

fn fit(x: &[f64], y: &[f64]) -> Option<FittedRate> {
    if x.len() < 3 {
        return None;
    }
    log_log_fit(x, y).ok().map(|fit| FittedRate { fit, points: x.len() })
}

fn slope_gate(result: &mut SweepResult, name: &str, diagnostic: &str, ok: impl Fn(f64) -> bool, want: &str) {
    let (passed, detail) = match result.fitted_rates.get(diagnostic) {
        Some(r) => (
            ok(r.fit.slope),
            format!("slope {:.4} (r² {:.4}, {} points), want {want}", r.fit.slope, r.fit.r_squared, r.points),
        ),
        None => (false, format!("no fit for {diagnostic}")),
    };
    result.gates.push(Gate {
        name: name.into(),
        passed,
        detail,
    });
}

fn summarize_coupled(cfg: &ExperimentConfig, result: &mut SweepResult) {
    if cfg.hbar_list.is_empty() {
        return;
    }
    // the fit uses the last sample reached by every run
    let common = result.coupled.iter().map(|(_, r)| r.samples.len()).min().unwrap_or(0);
    let mut hbars = Vec::new();
    let mut g = Vec::new();
    let mut mono = Vec::new();
    for (id, run) in &result.coupled {
        let push = |rows: &mut Vec<SweepRow>, time: f64, name: &str, v: f64| {
            rows.push(SweepRow {
                run_id: id.clone(),
                parameter: "hbar".into(),
                value: run.hbar,
                time,
                diagnostic: name.into(),
                diagnostic_value: v,
            })
        };
        if let Some(last) = run.last() {
            let t = last.report.time;
            push(&mut result.rows, t, "g_total", last.report.g_total);
            push(&mut result.rows, t, "kinetic_modulated", last.report.kinetic_modulated);
            push(&mut result.rows, t, "potential_gap", last.report.potential_gap);
            let cont = run.samples.iter().map(|s| s.continuity_residual).fold(0.0, f64::max);
            push(&mut result.rows, t, "max_continuity_residual", cont);
            if let Some(m) = last.monokinetic {
                push(&mut result.rows, t, "monokinetic_concentration", m);
            }
            push(&mut result.rows, t, "gronwall_passed", f64::from(u8::from(run.gronwall.passed())));
        }
        push(&mut result.rows, run.horizon.unwrap_or(f64::NAN), "horizon", run.horizon.unwrap_or(f64::NAN));
        if common > 0 {
            let s = &run.samples[common - 1];
            hbars.push(run.hbar);
            g.push(s.report.g_total);
            if let Some(m) = s.monokinetic {
                mono.push(m);
            }
        }
    }
    if let Some(r) = fit(&hbars, &g) {
        result.fitted_rates.insert("g_total_vs_hbar".into(), r);
    }
    if mono.len() == hbars.len() {
        if let Some(r) = fit(&hbars, &mono) {
            result.fitted_rates.insert("monokinetic_vs_hbar".into(), r);
        }
    }
    let bad: Vec<String> = result
        .coupled
        .iter()
        .filter(|(_, r)| !r.gronwall.passed())
        .map(|(_, r)| format!("hbar {} at t = {}", r.hbar, r.gronwall.first_violation.unwrap_or(f64::NAN)))
        .collect();
    result.gates.push(Gate {
        name: "gronwall_envelope".into(),
        passed: bad.is_empty() && !result.coupled.is_empty(),
        detail: if bad.is_empty() {
            "every run below its envelope".into()
        } else {
            format!("above the envelope: {}", bad.join("; "))
        },
    });
    slope_gate(result, "g_total_hbar_slope", "g_total_vs_hbar", |s| (s - 2.0).abs() <= 0.3, "2.0 ± 0.3");
    if cfg.grid.dim == 1 {
        slope_gate(result, "monokinetic_hbar_slope", "monokinetic_vs_hbar", |s| s >= 0.9, "≥ 0.9");
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn summarize_nbody(result: &mut SweepResult) {
    if result.nbody.is_empty() {
        return;
    }
    let mut ns = Vec::new();
    let mut total = Vec::new();
    let mut fn0 = Vec::new();
    let mut battery: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut initial: Vec<SerfatySample> = Vec::new();
    for (id, run) in &result.nbody {
        initial.extend(run.replicas.iter().map(|r| r.initial));
        let Some(k) = run.last_common() else { continue };
        let time = run.mean_at(k, |s| s.time).unwrap_or(f64::NAN);
        let mut push = |name: String, v: f64, t: f64| {
            result.rows.push(SweepRow {
                run_id: id.clone(),
                parameter: "n".into(),
                value: run.n as f64,
                time: t,
                diagnostic: name,
                diagnostic_value: v,
            })
        };
        let tot = run.mean_at(k, |s| s.total_modulated_per_particle.abs()).unwrap();
        let f0 = run.mean_at(0, |s| s.f_n_over_n2.abs()).unwrap();
        push("abs_total_modulated_per_particle".into(), tot, time);
        push("kinetic_modulated".into(), run.mean_at(k, |s| s.kinetic_modulated).unwrap(), time);
        push("abs_f_n_over_n2".into(), run.mean_at(k, |s| s.f_n_over_n2.abs()).unwrap(), time);
        push("abs_f_n_over_n2".into(), f0, 0.0);
        let b: Vec<f64> = (0..run.battery.len())
            .map(|m| run.mean_at(k, |s| s.battery[m]).unwrap())
            .collect();
        for (name, v) in run.battery.iter().zip(&b) {
            push(format!("battery_{name}"), *v, time);
        }
        ns.push(run.n as f64);
        total.push(tot);
        fn0.push(f0);
        battery.push(b);
        names = run.battery.clone();
    }
    if let Some(r) = fit(&ns, &total) {
        result.fitted_rates.insert("total_modulated_vs_n".into(), r);
    }
    if let Some(r) = fit(&ns, &fn0) {
        result.fitted_rates.insert("f_n_t0_vs_n".into(), r);
    }
    for (m, name) in names.iter().enumerate() {
        let col: Vec<f64> = battery.iter().map(|b| b[m]).collect();
        if let Some(r) = fit(&ns, &col) {
            result.fitted_rates.insert(format!("battery_{name}_vs_n"), r);
        }
    }
    let short: Vec<String> = result
        .nbody
        .iter()
        .filter(|(_, r)| r.truncated())
        .map(|(_, r)| format!("N = {}", r.n))
        .collect();
    result.gates.push(Gate {
        name: "nbody_reached_t_final".into(),
        passed: short.is_empty(),
        detail: if short.is_empty() {
            "every replica reached t_final".into()
        } else {
            format!("truncated: {}", short.join(", "))
        },
    });
    result.gates.push(Gate {
        name: "total_modulated_decreasing".into(),
        passed: ns.len() >= 3 && strictly_decreasing(&total),
        detail: format!("{total:?}"),
    });
    slope_gate(result, "total_modulated_n_slope", "total_modulated_vs_n", |s| s <= -0.25, "≤ −0.25");
    slope_gate(result, "f_n_t0_n_slope", "f_n_t0_vs_n", |s| s <= -0.5, "≤ −0.5");
    let bad: Vec<&str> = names
        .iter()
        .enumerate()
        .filter(|(m, _)| !strictly_decreasing(&battery.iter().map(|b| b[*m]).collect::<Vec<_>>()))
        .map(|(_, n)| n.as_str())
        .collect();
    result.gates.push(Gate {
        name: "battery_decreasing".into(),
        passed: ns.len() >= 3 && bad.is_empty(),
        detail: if bad.is_empty() {
            "every test function decreases with N".into()
        } else {
            format!("not decreasing: {}", bad.join(", "))
        },
    });
    let gate = match serfaty_report(&initial) {
        Ok(rep) => {
            let g = Gate {
                name: "serfaty_negative_part_exponent".into(),
                passed: rep.a_within_bound == Some(true),
                detail: match rep.a {
                    Some(a) => format!("exponent {:.4} (r² {:.4}), bound {A_BOUND:.4}", a.slope, a.r_squared),
                    None => "negative part vanished at some N; no fit".into(),
                },
            };
            result.serfaty = Some(rep);
            g
        }
        Err(e) => Gate {
            name: "serfaty_negative_part_exponent".into(),
            passed: false,
            detail: e.to_string(),
        },
    };
    result.gates.push(gate);
}

pub const SUMMARY_COLUMNS: [&str; 5] = ["parameter", "value", "time", "diagnostic", "diagnostic_value"];
pub const FIT_COLUMNS: [&str; 5] = ["diagnostic", "slope", "intercept", "r_squared", "points"];
pub const FAILURE_COLUMNS: [&str; 3] = ["parameter", "value", "error"];

/// Writes per-run CSVs, `summary.csv`, `fits.csv`, `failures.csv`,
/// near-collision dumps and `report.txt` into `dir`.
pub fn write_sweep(result: &SweepResult, dir: &Path) -> Result<(), LabError> {
    std::fs::create_dir_all(dir)?;
    let hash = &result.config_hash;
    let sweep_id = format!("{hash}-sweep");
    for (i, (id, run)) in result.coupled.iter().enumerate() {
        let f = std::fs::File::create(dir.join(format!("coupled_{i:02}.csv")))?;
        write_coupled(f, Provenance::new(id.clone(), hash.clone()), run)?;
    }
    for (id, run) in &result.nbody {
        let f = std::fs::File::create(dir.join(format!("nbody_n{}.csv", run.n)))?;
        write_nbody(f, Provenance::new(id.clone(), hash.clone()), run)?;
        for r in &run.replicas {
            if let Some(d) = &r.dump {
                write_json(&dir.join(format!("nbody_n{}_replica{}_dump.json", run.n, r.replica)), d)?;
            }
        }
    }
    let mut t = create_table(&dir.join("summary.csv"), Provenance::new(sweep_id.clone(), hash.clone()), &SUMMARY_COLUMNS)?;
    for r in &result.rows {
        t.set_run_id(r.run_id.clone());
        t.row(&[
            r.parameter.clone(),
            fmt(r.value),
            fmt(r.time),
            r.diagnostic.clone(),
            fmt(r.diagnostic_value),
        ])?;
    }
    t.finish()?;
    let mut t = create_table(&dir.join("fits.csv"), Provenance::new(sweep_id.clone(), hash.clone()), &FIT_COLUMNS)?;
    for (name, r) in &result.fitted_rates {
        t.row(&[
            name.clone(),
            fmt(r.fit.slope),
            fmt(r.fit.intercept),
            fmt(r.fit.r_squared),
            r.points.to_string(),
        ])?;
    }
    t.finish()?;
    let mut t = create_table(&dir.join("failures.csv"), Provenance::new(sweep_id, hash.clone()), &FAILURE_COLUMNS)?;
    for f in &result.failures {
        t.set_run_id(f.run_id.clone());
        t.row(&[f.parameter.clone(), fmt(f.value), f.error.clone()])?;
    }
    t.finish()?;
    std::fs::write(dir.join("report.txt"), report_text(result))?;
    Ok(())
}

pub fn report_text(result: &SweepResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "config {} module version {}", result.config_hash, mfsc_core::VERSION);
    let _ = writeln!(s);
    let _ = writeln!(s, "fitted log-log rates");
    for (name, r) in &result.fitted_rates {
        let _ = writeln!(
            s,
            "  {name}: slope {:.4} intercept {:.4} r² {:.4} ({} points)",
            r.fit.slope, r.fit.intercept, r.fit.r_squared, r.points
        );
    }
    for (id, run) in &result.coupled {
        if let Some(h) = run.horizon {
            let _ = writeln!(
                s,
                "  {id}: stopped at t = {h} ({})",
                run.stop_reason.as_deref().unwrap_or("unknown")
            );
        }
    }
    for (id, run) in &result.nbody {
        if let Some(h) = run.fluid_horizon {
            let _ = writeln!(s, "  {id}: fluid reference stopped at t = {h}");
        }
        for r in run.replicas.iter().filter(|r| r.truncated.is_some()) {
            let _ = writeln!(s, "  {id} replica {}: {}", r.replica, r.truncated.as_deref().unwrap_or(""));
        }
    }
    if let Some(rep) = &result.serfaty {
        let _ = writeln!(s);
        let _ = writeln!(s, "F_N / F'_N bounds at t = 0 (C fit {:.4})", rep.c_fit);
        for row in &rep.rows {
            let _ = writeln!(
                s,
                "  N = {}: max |F'_N| {:.4e}, max (F_N)_- {:.4e}, max residual {:.4e} over {} samples",
                row.n, row.max_abs_f_prime_n, row.max_f_n_negative, row.max_residual, row.samples
            );
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "gates");
    for g in &result.gates {
        let _ = writeln!(s, "  {} {}: {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail);
    }
    if !result.failures.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "failed runs");
        for f in &result.failures {
            let _ = writeln!(s, "  {} ({} = {}): {}", f.run_id, f.parameter, f.value, f.error);
        }
    }
    s
}
