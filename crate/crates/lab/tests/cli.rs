//! End-to-end runs of the `lab` binary: exit codes, provenance columns and
//! byte-identical reruns.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL_1D: &str = r#"
seed = 3
t_final = 0.2
dt = 0.02
sample_every = 5
hbar_list = [0.4, 0.2, 0.1]

[grid]
dim = 1
points_per_axis = 64
box_length = 16.0

[initial_density]
profile = "gaussian"
sigma = 1.0

[initial_phase]
profile = "gaussian_well"
beta = 0.3
width = 1.5
"#;

fn lab(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lab"));
    cmd.args(args);
    match workers {
        Some(w) => cmd.env("LAB_WORKERS", w),
        None => cmd.env_remove("LAB_WORKERS"),
    };
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn hartree_run_passes_and_stamps_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_1D);
    let out_dir = tmp.path().join("out");
    let out = lab(
        &["hartree-run", "--config", cfg.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()],
        None,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(out_dir.join("hartree.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..3], &["run_id", "module_version", "config_hash"]);
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), header.len());
        assert_eq!(cells[1], env!("CARGO_PKG_VERSION"));
        assert_eq!(cells[2].len(), 16);
    }
}

#[test]
fn failed_gate_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_1D);
    let out = lab(
        &[
            "hartree-run",
            "--config",
            cfg.to_str().unwrap(),
            "--output-dir",
            tmp.path().join("out").to_str().unwrap(),
            "--energy-tol",
            "1e-300",
        ],
        None,
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let bad = [
        SMALL_1D.replace("seed = 3", "seed = 3\nunknown_key = 1"),
        SMALL_1D.replace("points_per_axis = 64", "points_per_axis = 63"),
        SMALL_1D.replace("[0.4, 0.2, 0.1]", "[0.1, 0.2, 0.4]"),
        SMALL_1D.replace("sigma = 1.0", "sigma = -1.0"),
        "not toml at all [".to_string(),
    ];
    for text in &bad {
        let cfg = write_config(tmp.path(), text);
        let out = lab(
            &["euler-run", "--config", cfg.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()],
            None,
        );
        assert_eq!(code(&out), 2, "{text}\n{}", String::from_utf8_lossy(&out.stderr));
    }

    let cfg = write_config(tmp.path(), SMALL_1D);
    let out = lab(&["sweep", "--config", cfg.to_str().unwrap()], Some("zero"));
    assert_eq!(code(&out), 2);
    let out = lab(&["sweep", "--config", tmp.path().join("missing.toml").to_str().unwrap()], None);
    assert_eq!(code(&out), 2);
}

#[test]
fn sweep_is_reproducible_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_1D);
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "3", "3"].iter().enumerate() {
        let dir = tmp.path().join(format!("run{i}"));
        let out = lab(
            &["sweep", "--config", cfg.to_str().unwrap(), "--output-dir", dir.to_str().unwrap()],
            Some(workers),
        );
        assert!(matches!(code(&out), 0 | 1), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(csv_files(&dir));
    }
    let names: Vec<&str> = outputs[0].iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"summary.csv") && names.contains(&"coupled_00.csv"), "{names:?}");
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn saved_states_feed_diagnose_and_wigner() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_1D);
    let dir = tmp.path().join("out");
    let d = dir.to_str().unwrap();
    assert_eq!(code(&lab(&["hartree-run", "--config", cfg.to_str().unwrap(), "--output-dir", d], None)), 0);
    assert_eq!(code(&lab(&["euler-run", "--config", cfg.to_str().unwrap(), "--output-dir", d], None)), 0);

    let psi = dir.join("psi_final.json");
    let fluid = dir.join("fluid_final.json");
    let out = lab(&["diagnose", "--state", psi.to_str().unwrap(), "--fluid", fluid.to_str().unwrap()], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() > 1);

    let out = lab(&["wigner", "--state", psi.to_str().unwrap()], None);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = String::from_utf8(out.stdout).unwrap().lines().count() - 1;
    // refined x-grid of 128 points times the momentum samples
    assert!(rows > 0 && rows % 128 == 0, "{rows}");

    // a window too narrow for the state is a numerical failure
    let out = lab(&["wigner", "--state", psi.to_str().unwrap(), "--xi-points", "16"], None);
    assert_eq!(code(&out), 1);
}
