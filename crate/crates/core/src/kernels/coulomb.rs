use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::quadrature::integrate;
use crate::error::{Error, Result};

/// A kernel value together with the quadrature bookkeeping that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub point: [f64; 3],
    pub value: f64,
    pub quadrature_nodes: usize,
    pub quadrature_error_estimate: f64,
}

pub(crate) fn norm(z: [f64; 3]) -> f64 {
    (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt()
}

/// `V(z) = 1/(4π|z|)`.
pub fn coulomb(z: [f64; 3]) -> Result<f64> {
    let r = norm(z);
    if r == 0.0 {
        return Err(Error::Singularity);
    }
    Ok(1.0 / (4.0 * PI * r))
}

/// `∇V(z) = −z/(4π|z|³)`.
pub fn coulomb_gradient(z: [f64; 3]) -> Result<[f64; 3]> {
    let r = norm(z);
    if r == 0.0 {
        return Err(Error::Singularity);
    }
    let s = -1.0 / (4.0 * PI * r * r * r);
    Ok([s * z[0], s * z[1], s * z[2]])
}

/// Heat kernel `G_r(x) = (2πr)^{-3/2} exp(−|x|²/(2r))`.
pub fn heat_kernel(r: f64, x: [f64; 3]) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("heat kernel scale must be positive, got {r}")));
    }
    let x2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    Ok((2.0 * PI * r).powf(-1.5) * (-x2 / (2.0 * r)).exp())
}

/// Truncated kernel `V_η(z) = ½∫_η^∞ G_s(z) ds = (G_η ⋆ V)(z)`, which is the
/// Coulomb potential itself at `η = 0`.
///
/// The range is split at `s₀ = max(|z|², η)`. Below `s₀` the variable
/// `s = e^σ` is used; above it `s = s₀/t²`, which turns the algebraic tail
/// into a Gaussian in `t ∈ (0, 1]`.
pub fn fdll_value(z: [f64; 3], eta: f64) -> Result<KernelEval> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::Domain(format!("truncation scale must be nonnegative, got {eta}")));
    }
    let z2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
    if z2 == 0.0 && eta == 0.0 {
        return Err(Error::Singularity);
    }
    let a = 0.5 * z2;
    let s0 = z2.max(eta);
    let pref = s0 * (2.0 * PI * s0).powf(-1.5);
    let upper = integrate(|t| (-a * t * t / s0).exp(), 0.0, 1.0, 1e-17, 1e-13)?;
    let mut value = pref * upper.value;
    let mut error = pref * upper.error;
    let mut nodes = upper.evaluations;
    if eta < z2 {
        // below s = a/800 the integrand is below e^{-800}
        let lo = eta.max(a / 800.0).ln();
        let hi = z2.ln();
        let c = 0.5 * (2.0 * PI).powf(-1.5);
        let lower = integrate(
            |sigma| c * (-0.5 * sigma - a * (-sigma).exp()).exp(),
            lo,
            hi,
            1e-17,
            1e-13,
        )?;
        value += lower.value;
        error += lower.error;
        nodes += lower.evaluations;
    }
    Ok(KernelEval {
        point: z,
        value,
        quadrature_nodes: nodes,
        quadrature_error_estimate: error,
    })
}

/// `v₀ = ∫G_1(Y)/(4π|Y|) dY`, computed once by radial quadrature.
pub fn v0() -> f64 {
    static V0: OnceLock<f64> = OnceLock::new();
    *V0.get_or_init(|| {
        let c = (2.0 * PI).powf(-1.5);
        let q = integrate(|r| c * r * (-0.5 * r * r).exp(), 0.0, 60.0, 1e-17, 1e-14)
            .expect("radial Gaussian moment converges");
        assert!(
            (q.value - c).abs() < 1e-10,
            "radial quadrature gave v0 = {} instead of {c}",
            q.value
        );
        q.value
    })
}

/// `V_η(0) = v₀/√η`.
pub fn v_eta_at_zero(eta: f64) -> Result<f64> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Domain(format!("eta must be positive, got {eta}")));
    }
    Ok(v0() / eta.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::quadrature::gauss_legendre;
    use statrs::function::erf::erf;

    #[test]
    fn coulomb_values() {
        assert!((coulomb([1.0, 0.0, 0.0]).unwrap() - 0.079_577_471_545_948).abs() < 1e-15);
        assert!((coulomb([0.0, 2.0, 0.0]).unwrap() - 1.0 / (8.0 * PI)).abs() < 1e-15);
        let s3 = 3f64.sqrt();
        assert!((coulomb([1.0, 1.0, 1.0]).unwrap() - 1.0 / (4.0 * PI * s3)).abs() < 1e-15);
        assert_eq!(coulomb([0.0; 3]), Err(Error::Singularity));
    }

    #[test]
    fn heat_kernel_values_and_mass() {
        assert!((heat_kernel(1.0, [0.0; 3]).unwrap() - 0.063_493_635_934_241).abs() < 1e-14);
        assert!(heat_kernel(0.0, [0.0; 3]).is_err());
        assert!(heat_kernel(-1.0, [0.0; 3]).is_err());
        // product Gauss-Legendre over [-12, 12]^3
        let (x, w) = gauss_legendre(64);
        let half = 12.0;
        let mut total = 0.0;
        for i in 0..64 {
            for j in 0..64 {
                for k in 0..64 {
                    let p = [half * x[i], half * x[j], half * x[k]];
                    total += w[i] * w[j] * w[k] * heat_kernel(1.0, p).unwrap();
                }
            }
        }
        total *= half * half * half;
        assert!((total - 1.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn heat_semigroup() {
        let (x, w) = gauss_legendre(48);
        let half = 10.0;
        let (r, s) = (0.7, 1.3);
        for p in [[0.0, 0.0, 0.0], [0.5, -0.3, 1.1], [2.0, 0.0, 0.0]] {
            let mut conv = 0.0;
            for i in 0..48 {
                for j in 0..48 {
                    for k in 0..48 {
                        let y = [half * x[i], half * x[j], half * x[k]];
                        let d = [p[0] - y[0], p[1] - y[1], p[2] - y[2]];
                        conv += w[i] * w[j] * w[k]
                            * heat_kernel(r, y).unwrap()
                            * heat_kernel(s, d).unwrap();
                    }
                }
            }
            conv *= half * half * half;
            assert!((conv - heat_kernel(r + s, p).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn untruncated_kernel_is_coulomb() {
        let e = fdll_value([1.0, 0.0, 0.0], 0.0).unwrap();
        assert!((e.value - 0.079_577_471_5).abs() < 1e-8);
        assert!(e.quadrature_error_estimate >= 0.0);
        let e = fdll_value([0.0, 0.1, 0.0], 0.0).unwrap();
        assert!((e.value / 0.795_774_715 - 1.0).abs() < 1e-7);
        for i in 0..50 {
            let r = 0.05 * (200f64).powf(i as f64 / 49.0);
            let z = [r / 3f64.sqrt(); 3];
            let v = coulomb(z).unwrap();
            let f = fdll_value(z, 0.0).unwrap().value;
            assert!((f - v).abs() <= 1e-8f64.max(1e-7 * v), "r = {r}");
        }
        assert_eq!(fdll_value([0.0; 3], 0.0), Err(Error::Singularity));
        assert!(fdll_value([1.0, 0.0, 0.0], -1.0).is_err());
    }

    #[test]
    fn truncated_kernel_matches_smeared_coulomb() {
        // G_η ⋆ V is the potential of a Gaussian charge: erf(|z|/√(2η))/(4π|z|)
        for eta in [0.01f64, 0.3, 4.0] {
            for r in [0.05, 0.5, 1.0, 3.0, 9.0] {
                let z = [0.0, r, 0.0];
                let exact = erf(r / (2.0 * eta).sqrt()) / (4.0 * PI * r);
                let f = fdll_value(z, eta).unwrap().value;
                assert!((f - exact).abs() < 1e-12 + 1e-10 * exact, "eta {eta} r {r}");
                assert!(f <= coulomb(z).unwrap() * (1.0 + 1e-12));
            }
        }
        let at_zero = fdll_value([0.0; 3], 4.0).unwrap().value;
        assert!((at_zero - 0.031_746_817_967).abs() < 1e-11);
    }

    #[test]
    fn v_eta_scaling() {
        assert!((v0() - (2.0 * PI).powf(-1.5)).abs() < 1e-10);
        assert!((v_eta_at_zero(1.0).unwrap() - 0.063_493_635_934).abs() < 1e-11);
        assert!((v_eta_at_zero(4.0).unwrap() - 0.031_746_817_967).abs() < 1e-11);
        let mut prev = f64::INFINITY;
        for eta in [0.1f64, 1.0, 7.0, 50.0, 1e4] {
            let v = v_eta_at_zero(eta).unwrap();
            assert!((v * eta.sqrt() - v0()).abs() < 1e-12);
            assert!(v < prev && v > 0.0);
            prev = v;
        }
        assert!(v_eta_at_zero(0.0).is_err());
    }
}
