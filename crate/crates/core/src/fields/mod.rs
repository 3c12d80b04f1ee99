//! Periodic grids, discrete Fourier transforms, spectral derivatives, the
//! neutralized Poisson solve and off-grid interpolation.

mod grid;
mod interp;
mod spectral;

pub use grid::{GridSpec, ScalarField, VectorField, WaveField, DEFAULT_DEALIAS_FRACTION};
pub use interp::Interpolator;
pub use spectral::{
    coulomb_field_gradient, dealias, forward_transform, forward_transform_wave, inverse_transform,
    poisson_solve, refine, spectral_divergence, spectral_gradient, spectral_laplacian, Spectral,
};
pub use spectral::check_same;
