//! Kernel identity checks printed by `lab check-kernels`.

use std::io::Write;

use mfsc_core::kernels::{coulomb, fdll_value, mollified_gradient, v0, Mollifier};

use crate::output::{fmt, Provenance, Table};
use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelCheck {
    pub check: &'static str,
    pub point: f64,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
    pub tolerance: f64,
}

impl KernelCheck {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

/// Truncated kernel at `η = 0` against Coulomb on 50 log-spaced radii in
/// `[0.05, 10]`, `v₀` against `(2π)^{−3/2}`, and the mollifier bound
/// `|z||∇V^ε(z)| ≤ C V(z)`.
pub fn kernel_checks() -> Result<Vec<KernelCheck>, LabError> {
    let mut out = Vec::new();
    for i in 0..50 {
        let r = 0.05 * (200f64).powf(i as f64 / 49.0);
        let z = [r / 3f64.sqrt(); 3];
        let reference = coulomb(z)?;
        let value = fdll_value(z, 0.0)?.value;
        out.push(KernelCheck {
            check: "fdll_vs_coulomb",
            point: r,
            value,
            reference,
            error: ((value - reference) / reference).abs(),
            tolerance: 1e-7,
        });
    }
    let reference = (2.0 * std::f64::consts::PI).powf(-1.5);
    out.push(KernelCheck {
        check: "v0",
        point: 0.0,
        value: v0(),
        reference,
        error: (v0() - reference).abs(),
        tolerance: 1e-10,
    });
    for eps in [0.05, 0.2, 1.0] {
        let m = Mollifier::new(eps)?;
        for i in 0..40 {
            let r = 1e-3 * (1e4f64).powf(i as f64 / 39.0);
            let z = [0.0, 0.0, r];
            let g = mollified_gradient(&m, z)?;
            let value = r * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            let bound = m.constant_c * coulomb(z)?;
            out.push(KernelCheck {
                check: "mollifier_bound",
                point: r,
                value,
                reference: bound,
                // excess over the bound; zero when it holds
                error: (value - bound).max(0.0),
                tolerance: 1e-12 * bound,
            });
        }
    }
    Ok(out)
}

pub const KERNEL_COLUMNS: [&str; 7] = ["check", "point", "value", "reference", "error", "tolerance", "pass"];

pub fn write_kernel_checks<W: Write>(out: W, provenance: Provenance, checks: &[KernelCheck]) -> Result<(), LabError> {
    let mut t = Table::new(out, provenance, &KERNEL_COLUMNS)?;
    for c in checks {
        t.row(&[
            c.check.to_string(),
            fmt(c.point),
            fmt(c.value),
            fmt(c.reference),
            fmt(c.error),
            fmt(c.tolerance),
            c.passed().to_string(),
        ])?;
    }
    t.finish()
}
