use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::coulomb::norm;
use super::quadrature::integrate;
use crate::error::{Error, Result};

/// Radial bump `ζ(y) = c·exp(−1/(1−|y|²))` on the unit ball, scaled to
/// `ζ_ε(y) = ε⁻³ζ(y/ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub epsilon: f64,
    normalization: f64,
    pub constant_c: f64,
}

fn bump(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

impl Mollifier {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Domain(format!("mollifier width must be positive, got {epsilon}")));
        }
        let mass = integrate(|s| 4.0 * PI * s * s * bump(s), 0.0, 1.0, 1e-16, 1e-13)?;
        let normalization = 1.0 / mass.value;
        // C = 4∫ζ(y)/|y|² dy
        let inv2 = integrate(|s| 4.0 * PI * bump(s), 0.0, 1.0, 1e-16, 1e-13)?;
        Ok(Self {
            epsilon,
            normalization,
            constant_c: 4.0 * normalization * inv2.value,
        })
    }

    pub fn profile_description(&self) -> &'static str {
        "c*exp(-1/(1-|y|^2)) for |y| < 1, zero outside"
    }

    /// Unit-scale profile `ζ(y)`.
    pub fn zeta(&self, y: [f64; 3]) -> f64 {
        self.normalization * bump(norm(y))
    }

    /// Scaled profile `ζ_ε(y)`.
    pub fn zeta_eps(&self, y: [f64; 3]) -> f64 {
        let e = self.epsilon;
        self.zeta([y[0] / e, y[1] / e, y[2] / e]) / (e * e * e)
    }

    /// Mass of `ζ` inside the ball of radius `s` (unit scale).
    pub fn enclosed_mass(&self, s: f64) -> Result<f64> {
        if s <= 0.0 {
            return Ok(0.0);
        }
        let top = s.min(1.0);
        let q = integrate(|r| 4.0 * PI * r * r * bump(r), 0.0, top, 1e-16, 1e-13)?;
        Ok(self.normalization * q.value)
    }
}

/// `∇(ζ_ε ⋆ V)(z)`. By Newton's shell theorem only the charge inside
/// `|y| < |z|` acts, so `∇V^ε(z) = −M(|z|/ε)·z/(4π|z|³)`.
pub fn mollified_gradient(m: &Mollifier, z: [f64; 3]) -> Result<[f64; 3]> {
    let r = norm(z);
    if r == 0.0 {
        return Ok([0.0; 3]);
    }
    let mass = m.enclosed_mass(r / m.epsilon)?;
    let s = -mass / (4.0 * PI * r * r * r);
    Ok([s * z[0], s * z[1], s * z[2]])
}
