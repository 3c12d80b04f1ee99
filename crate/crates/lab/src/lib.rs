//! Experiment harness: configuration, coupled Hartree / Euler-Poisson runs,
//! N-body runs against the fluid, parameter sweeps and CSV output.

pub mod battery;
pub mod config;
pub mod coupled;
pub mod kernels_check;
pub mod nbody;
pub mod output;
pub mod sweep;

pub use config::ExperimentConfig;

/// Environment variable holding the number of sweep workers.
pub const WORKERS_ENV: &str = "LAB_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] mfsc_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

impl LabError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Io(_) => 2,
            LabError::Numerical(mfsc_core::Error::Config(_)) => 2,
            LabError::Numerical(_) => 1,
        }
    }
}

/// Number of sweep workers from the environment, defaulting to the core count.
pub fn worker_count() -> Result<usize, LabError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(LabError::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}
