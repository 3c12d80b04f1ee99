//! Numerical laboratory for the mean-field and semiclassical limits of
//! Coulomb systems: spectral Hartree and pressureless Euler-Poisson solvers,
//! classical N-body ensembles, modulated-energy functionals and phase-space
//! transforms.

pub mod error;
pub mod diagnostics;
pub mod ensemble;
pub mod euler;
pub mod fields;
pub mod hartree;
pub mod phase_space;
pub mod kernels;
pub mod profiles;
pub mod stats;

pub use error::{Error, Result};

/// Version of the numerical modules, stamped on every output row.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
