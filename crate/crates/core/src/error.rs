use thiserror::Error;

/// Errors raised by the numerical kernels and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("size mismatch: expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("kernel is singular at the origin")]
    Singularity,

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {evaluations} evaluations")]
    Quadrature {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("solution blew up after t = {last_valid_time}")]
    BlowUp { last_valid_time: f64 },

    #[error("time step {dt} exceeds the admissible bound {bound}")]
    StepSize { dt: f64, bound: f64 },

    #[error("particles {i} and {j} are {distance:e} apart at t = {time}")]
    NearCollision {
        i: usize,
        j: usize,
        distance: f64,
        time: f64,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("state has spectral content beyond the momentum window (|xi| up to {required}, window {available})")]
    Aliasing { required: f64, available: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
