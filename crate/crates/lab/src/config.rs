//! Experiment configuration (TOML).
//!
//! ```toml
//! seed = 7
//! output_dir = "out/sweep"
//! t_final = 0.5
//! dt = 0.01
//! sample_every = 10
//! hbar_list = [0.5, 0.25, 0.125, 0.0625]
//! n_list = [64, 256, 1024]
//! gronwall_c = 10.0
//!
//! [grid]
//! dim = 3
//! points_per_axis = 48
//! box_length = 16.0
//!
//! [initial_density]
//! profile = "gaussian"
//! sigma = 1.0
//!
//! [initial_phase]
//! profile = "gaussian_well"
//! beta = 0.3
//! width = 1.5
//! ```
//!
//! Optional sections `[modes]`, `[euler]` and `[nbody]` are described on the
//! corresponding structs.

use std::path::{Path, PathBuf};

use mfsc_core::ensemble::{BoundaryMode, NbodyOptions};
use mfsc_core::euler::EulerOptions;
use mfsc_core::fields::{spectral_gradient, GridSpec, ScalarField, DEFAULT_DEALIAS_FRACTION};
use mfsc_core::profiles::{bump_phase, periodized_gaussian, well_phase};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub points_per_axis: usize,
    pub box_length: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
}

fn default_dealias() -> f64 {
    DEFAULT_DEALIAS_FRACTION
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec, LabError> {
        Ok(GridSpec::with_dealias(
            self.dim,
            self.points_per_axis,
            self.box_length,
            self.dealias_fraction,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityProfile {
    /// Periodized Gaussian, normalized on the grid.
    Gaussian {
        sigma: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    /// `1/|box|`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseProfile {
    /// `S = (βw²/2)(1 − e^{−|x|²/2w²})`, expanding for `β > 0`.
    GaussianWell { beta: f64, width: f64 },
    /// `S = (β/2)|x|² e^{−|x|²/2w²}`.
    QuadraticBump { beta: f64, width: f64 },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modes {
    /// Periodic images for the particles; `false` selects free space.
    #[serde(default = "yes")]
    pub images: bool,
    /// Recompute the potential for the closing Hartree half step.
    #[serde(default = "yes")]
    pub self_consistent_halves: bool,
}

fn yes() -> bool {
    true
}

impl Default for Modes {
    fn default() -> Self {
        Self {
            images: true,
            self_consistent_halves: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EulerConfig {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Defaults to `50/t_final`.
    pub blow_up_threshold: Option<f64>,
    #[serde(default = "default_floor")]
    pub density_floor: f64,
}

fn default_cfl() -> f64 {
    0.5
}

fn default_floor() -> f64 {
    -1e-6
}

impl Default for EulerConfig {
    fn default() -> Self {
        Self {
            cfl: default_cfl(),
            blow_up_threshold: None,
            density_floor: default_floor(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    /// Inverse CDF on the (refined) grid density.
    Grid,
    /// Exact wrapped normal; needs a Gaussian density profile.
    Exact,
    /// Cell centres of a cubic lattice; every `n` must be a cube.
    Lattice,
}

/// `m` with `m³ = n`.
pub fn cube_root(n: usize) -> Option<usize> {
    let m = (n as f64).cbrt().round() as usize;
    (m * m * m == n).then_some(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NbodyConfig {
    /// Points per axis of the 3-D fluid grid used against the particles;
    /// defaults to the main grid.
    pub grid_points: Option<usize>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_sampler")]
    pub sampler: Sampler,
    #[serde(default = "default_refine")]
    pub sampler_refine: usize,
    #[serde(default = "default_guard")]
    pub guard_constant: f64,
}

fn default_replicas() -> usize {
    4
}

fn default_sampler() -> Sampler {
    Sampler::Grid
}

fn default_refine() -> usize {
    2
}

fn default_guard() -> f64 {
    NbodyOptions::default().guard_constant
}

impl Default for NbodyConfig {
    fn default() -> Self {
        Self {
            grid_points: None,
            replicas: default_replicas(),
            sampler: default_sampler(),
            sampler_refine: default_refine(),
            guard_constant: default_guard(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub hbar_list: Vec<f64>,
    #[serde(default)]
    pub n_list: Vec<usize>,
    pub t_final: f64,
    pub dt: f64,
    /// Steps between diagnostic samples.
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    pub initial_density: DensityProfile,
    pub initial_phase: PhaseProfile,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_gronwall")]
    pub gronwall_c: f64,
    #[serde(default)]
    pub modes: Modes,
    #[serde(default)]
    pub euler: EulerConfig,
    #[serde(default)]
    pub nbody: NbodyConfig,
}

fn default_sample_every() -> usize {
    10
}

fn default_output() -> PathBuf {
    PathBuf::from("lab-output")
}

fn default_gronwall() -> f64 {
    10.0
}

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))[..16].to_string()
}

fn config_error(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), LabError> {
        self.grid.spec()?;
        if !(self.t_final > 0.0) {
            return Err(config_error("t_final must be positive"));
        }
        if !(self.dt > 0.0) || self.dt > self.t_final {
            return Err(config_error("dt must be positive and at most t_final"));
        }
        if self.sample_every == 0 {
            return Err(config_error("sample_every must be at least 1"));
        }
        if self.hbar_list.iter().any(|h| !(*h > 0.0)) {
            return Err(config_error("hbar values must be positive"));
        }
        if self.hbar_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(config_error("hbar_list must be strictly decreasing"));
        }
        if self.n_list.iter().any(|&n| n < 2) {
            return Err(config_error("particle numbers must be at least 2"));
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_error("n_list must be strictly increasing"));
        }
        if !(self.gronwall_c > 0.0) {
            return Err(config_error("gronwall_c must be positive"));
        }
        if self.nbody.replicas == 0 || self.nbody.sampler_refine == 0 {
            return Err(config_error("nbody.replicas and nbody.sampler_refine must be at least 1"));
        }
        match &self.initial_density {
            DensityProfile::Gaussian { sigma, .. } if !(*sigma > 0.0) => {
                return Err(config_error("initial_density.sigma must be positive"))
            }
            DensityProfile::Uniform if self.nbody.sampler == Sampler::Exact && !self.n_list.is_empty() => {
                return Err(config_error("the exact sampler needs a Gaussian density"))
            }
            _ => {}
        }
        match &self.initial_phase {
            PhaseProfile::GaussianWell { width, .. } | PhaseProfile::QuadraticBump { width, .. } if !(*width > 0.0) => {
                return Err(config_error("initial_phase.width must be positive"))
            }
            _ => {}
        }
        if self.nbody.sampler == Sampler::Lattice {
            if let Some(n) = self.n_list.iter().find(|&&n| cube_root(n).is_none()) {
                return Err(config_error(format!("the lattice sampler needs cubes, got n = {n}")));
            }
        }
        if !self.n_list.is_empty() {
            self.nbody_grid()?;
            if !self.modes.images {
                return Err(config_error(
                    "N-body runs against a fluid need periodic images (modes.images = true)",
                ));
            }
        }
        let rho = self.initial_rho(self.grid.spec()?)?;
        if rho.min() < 0.0 {
            return Err(config_error("initial density is negative somewhere"));
        }
        Ok(())
    }

    /// Hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        content_hash(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.grid.spec().expect("validated")
    }

    /// Grid of the fluid that the particles are compared with.
    pub fn nbody_grid(&self) -> Result<GridSpec, LabError> {
        let n = self.nbody.grid_points.unwrap_or(self.grid.points_per_axis);
        Ok(GridSpec::with_dealias(3, n, self.grid.box_length, self.grid.dealias_fraction)?)
    }

    pub fn initial_rho(&self, grid: GridSpec) -> Result<ScalarField, LabError> {
        Ok(match &self.initial_density {
            DensityProfile::Gaussian { sigma, center } => periodized_gaussian(grid, *center, *sigma)?,
            DensityProfile::Uniform => ScalarField::constant(grid, 1.0 / grid.volume()),
        })
    }

    pub fn initial_phase(&self, grid: GridSpec) -> ScalarField {
        match &self.initial_phase {
            PhaseProfile::GaussianWell { beta, width } => well_phase(grid, *beta, *width),
            PhaseProfile::QuadraticBump { beta, width } => bump_phase(grid, *beta, *width),
            PhaseProfile::Zero => ScalarField::zeros(grid),
        }
    }

    pub fn initial_velocity(&self, grid: GridSpec) -> Result<mfsc_core::fields::VectorField, LabError> {
        Ok(spectral_gradient(&self.initial_phase(grid))?)
    }

    pub fn euler_options(&self) -> EulerOptions {
        let mut o = EulerOptions::for_run(self.t_final);
        o.cfl = self.euler.cfl;
        o.density_floor = self.euler.density_floor;
        if let Some(t) = self.euler.blow_up_threshold {
            o.blow_up_threshold = t;
        }
        o
    }

    pub fn nbody_options(&self) -> NbodyOptions {
        NbodyOptions {
            dt_max: self.dt,
            guard_constant: self.nbody.guard_constant,
            coupling: 1.0,
        }
    }

    pub fn boundary_mode(&self) -> BoundaryMode {
        if self.modes.images {
            BoundaryMode::Periodic
        } else {
            BoundaryMode::FreeSpace
        }
    }

    /// Number of steps of length `dt` to reach `t_final` (the last one may be short).
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil() as usize
    }
}
