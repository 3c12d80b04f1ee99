//! Coulomb kernel, heat kernel, truncated kernels and mollifiers.

mod coulomb;
mod mollifier;
mod periodic;
pub mod quadrature;

pub use coulomb::{
    coulomb, coulomb_gradient, fdll_value, heat_kernel, v0, v_eta_at_zero, KernelEval,
};
pub use mollifier::{mollified_gradient, Mollifier};
pub use periodic::{ewald_correction, EwaldTable, PairKernel};
