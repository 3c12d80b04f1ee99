//! Pair kernel for particles in the periodic box.
//!
//! The periodic Green's function with neutralizing background is the
//! function whose Fourier coefficients are `1/(V|k|²)` for `k ≠ 0` and zero
//! otherwise, i.e. the kernel that `poisson_solve` applies on the grid. It is
//! split as `G_per(r) = 1/(4π|r|) + C(r)` with `r` the minimum image and `C`
//! smooth on the half box. `C` is evaluated once by Ewald summation on a
//! table and interpolated with tricubic Lagrange stencils.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::erf::{erf, erfc};

use super::coulomb::norm;
use crate::error::{Error, Result};

/// Ewald splitting parameter in units of `1/L`.
const ALPHA_L: f64 = 3.5;
/// Reciprocal modes per axis kept in the Fourier sum: `|m| ≤ M_MAX`.
const M_MAX: i64 = 8;
/// Table nodes per half box length.
const NODES: usize = 48;

/// Smooth correction `C = G_per − 1/(4π|r|)` evaluated by Ewald summation.
pub fn ewald_correction(r: [f64; 3], box_length: f64) -> f64 {
    let l = box_length;
    let alpha = ALPHA_L / l;
    let vol = l * l * l;
    let mut real = 0.0;
    for nx in -2i64..=2 {
        for ny in -2i64..=2 {
            for nz in -2i64..=2 {
                let d = [
                    r[0] + nx as f64 * l,
                    r[1] + ny as f64 * l,
                    r[2] + nz as f64 * l,
                ];
                let dn = norm(d);
                if nx == 0 && ny == 0 && nz == 0 {
                    real -= erf_over_r(alpha, dn) / (4.0 * PI);
                } else {
                    real += erfc(alpha * dn) / (4.0 * PI * dn);
                }
            }
        }
    }
    let mut recip = 0.0;
    let kk = 2.0 * PI / l;
    for mx in -M_MAX..=M_MAX {
        for my in -M_MAX..=M_MAX {
            for mz in -M_MAX..=M_MAX {
                if mx == 0 && my == 0 && mz == 0 {
                    continue;
                }
                let k = [mx as f64 * kk, my as f64 * kk, mz as f64 * kk];
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                let phase = k[0] * r[0] + k[1] * r[1] + k[2] * r[2];
                recip += (-k2 / (4.0 * alpha * alpha)).exp() / k2 * phase.cos();
            }
        }
    }
    real + recip / vol - 1.0 / (4.0 * alpha * alpha * vol)
}

// erf(αr)/r with its limit 2α/√π at r = 0
fn erf_over_r(alpha: f64, r: f64) -> f64 {
    let x = alpha * r;
    if x < 1e-4 {
        2.0 * alpha / PI.sqrt() * (1.0 - x * x / 3.0)
    } else {
        erf(x) / r
    }
}

/// Tabulated `C` on `[0, L/2]³` (with ghost layers), exploiting evenness of
/// `C` in each coordinate separately.
#[derive(Debug)]
pub struct EwaldTable {
    box_length: f64,
    step: f64,
    side: usize,
    values: Vec<f64>,
}

impl EwaldTable {
    /// Shared table for a box length, built on first use.
    pub fn get(box_length: f64) -> Arc<EwaldTable> {
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<EwaldTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("table cache poisoned");
        map.entry(box_length.to_bits())
            .or_insert_with(|| Arc::new(EwaldTable::build(box_length)))
            .clone()
    }

    fn build(box_length: f64) -> Self {
        let l = box_length;
        let step = 0.5 * l / NODES as f64;
        // node i sits at (i − 1)·step, i = 0..side
        let side = NODES + 4;
        let coord: Vec<f64> = (0..side).map(|i| (i as f64 - 1.0) * step).collect();
        let alpha = ALPHA_L / l;
        let vol = l * l * l;

        // reciprocal part is separable over the tensor grid: contract one axis at a time
        let nm = (2 * M_MAX + 1) as usize;
        let kk = 2.0 * PI / l;
        let cosines: Vec<Vec<f64>> = (0..nm)
            .map(|m| {
                let k = (m as i64 - M_MAX) as f64 * kk;
                coord.iter().map(|x| (k * x).cos()).collect()
            })
            .collect();
        let weight = |a: usize, b: usize, c: usize| -> f64 {
            let m = [a as i64 - M_MAX, b as i64 - M_MAX, c as i64 - M_MAX];
            if m == [0, 0, 0] {
                return 0.0;
            }
            let k2 = kk * kk * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
            (-k2 / (4.0 * alpha * alpha)).exp() / k2
        };
        // t1[a][b][z] = Σ_c w(a,b,c) cos(k_c z)
        let mut t1 = vec![0.0; nm * nm * side];
        for a in 0..nm {
            for b in 0..nm {
                for c in 0..nm {
                    let w = weight(a, b, c);
                    let row = &mut t1[(a * nm + b) * side..(a * nm + b + 1) * side];
                    for (z, v) in row.iter_mut().enumerate() {
                        *v += w * cosines[c][z];
                    }
                }
            }
        }
        // t2[a][y][z] = Σ_b t1[a][b][z] cos(k_b y)
        let mut t2 = vec![0.0; nm * side * side];
        for a in 0..nm {
            for b in 0..nm {
                for y in 0..side {
                    let cy = cosines[b][y];
                    for z in 0..side {
                        t2[(a * side + y) * side + z] += t1[(a * nm + b) * side + z] * cy;
                    }
                }
            }
        }
        let mut values = vec![0.0; side * side * side];
        for a in 0..nm {
            for x in 0..side {
                let cx = cosines[a][x];
                for y in 0..side {
                    for z in 0..side {
                        values[(x * side + y) * side + z] += t2[(a * side + y) * side + z] * cx;
                    }
                }
            }
        }
        let background = 1.0 / (4.0 * alpha * alpha * vol);
        for x in 0..side {
            for y in 0..side {
                for z in 0..side {
                    let r = [coord[x], coord[y], coord[z]];
                    let mut real = 0.0;
                    for nx in -2i64..=2 {
                        for ny in -2i64..=2 {
                            for nz in -2i64..=2 {
                                let d = [
                                    r[0] + nx as f64 * l,
                                    r[1] + ny as f64 * l,
                                    r[2] + nz as f64 * l,
                                ];
                                let dn = norm(d);
                                if nx == 0 && ny == 0 && nz == 0 {
                                    real -= erf_over_r(alpha, dn) / (4.0 * PI);
                                } else if alpha * dn < 9.0 {
                                    real += erfc(alpha * dn) / (4.0 * PI * dn);
                                }
                            }
                        }
                    }
                    let v = &mut values[(x * side + y) * side + z];
                    *v = *v / vol + real - background;
                }
            }
        }
        Self {
            box_length,
            step,
            side,
            values,
        }
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Interpolated `C(r)` and its gradient, `r` already reduced to the minimum image.
    pub fn eval(&self, r: [f64; 3]) -> (f64, [f64; 3]) {
        let mut base = [0usize; 3];
        let mut w = [[0.0; 4]; 3];
        let mut dw = [[0.0; 4]; 3];
        let mut sign = [1.0; 3];
        for a in 0..3 {
            let x = r[a].abs();
            if r[a] < 0.0 {
                sign[a] = -1.0;
            }
            let s = x / self.step;
            let i = (s.floor() as usize).min(NODES - 1);
            let f = s - i as f64;
            base[a] = i; // table index of node i − 1
            let (fm, f0, f1, f2) = (f + 1.0, f, f - 1.0, f - 2.0);
            w[a] = [
                -f0 * f1 * f2 / 6.0,
                fm * f1 * f2 / 2.0,
                -fm * f0 * f2 / 2.0,
                fm * f0 * f1 / 6.0,
            ];
            dw[a] = [
                -(f1 * f2 + f0 * f2 + f0 * f1) / 6.0,
                (f1 * f2 + fm * f2 + fm * f1) / 2.0,
                -(f0 * f2 + fm * f2 + fm * f0) / 2.0,
                (f0 * f1 + fm * f1 + fm * f0) / 6.0,
            ];
        }
        let side = self.side;
        let mut val = 0.0;
        let mut grad = [0.0; 3];
        for i in 0..4 {
            let px = (base[0] + i) * side;
            for j in 0..4 {
                let py = (px + base[1] + j) * side + base[2];
                let mut s = 0.0;
                let mut sd = 0.0;
                for k in 0..4 {
                    let v = self.values[py + k];
                    s += w[2][k] * v;
                    sd += dw[2][k] * v;
                }
                val += w[0][i] * w[1][j] * s;
                grad[0] += dw[0][i] * w[1][j] * s;
                grad[1] += w[0][i] * dw[1][j] * s;
                grad[2] += w[0][i] * w[1][j] * sd;
            }
        }
        for a in 0..3 {
            grad[a] *= sign[a] / self.step;
        }
        (val, grad)
    }
}

/// Interaction kernel used by the particle code.
#[derive(Debug, Clone)]
pub enum PairKernel {
    /// Bare `1/(4π|r|)` without images.
    FreeSpace,
    /// Periodic kernel on a box, consistent with the grid Poisson solve.
    Periodic(Arc<EwaldTable>),
}

impl PairKernel {
    pub fn periodic(box_length: f64) -> Self {
        PairKernel::Periodic(EwaldTable::get(box_length))
    }

    fn reduce(&self, d: [f64; 3]) -> [f64; 3] {
        match self {
            PairKernel::FreeSpace => d,
            PairKernel::Periodic(t) => {
                let l = t.box_length;
                [
                    d[0] - l * (d[0] / l).round(),
                    d[1] - l * (d[1] / l).round(),
                    d[2] - l * (d[2] / l).round(),
                ]
            }
        }
    }

    /// Kernel value and gradient at separation `d`.
    pub fn value_gradient(&self, d: [f64; 3]) -> Result<(f64, [f64; 3])> {
        let r = self.reduce(d);
        let rn = norm(r);
        if rn == 0.0 {
            return Err(Error::Singularity);
        }
        let v = 1.0 / (4.0 * PI * rn);
        let s = -v / (rn * rn);
        let mut g = [s * r[0], s * r[1], s * r[2]];
        let mut val = v;
        if let PairKernel::Periodic(t) = self {
            let (c, gc) = t.eval(r);
            val += c;
            for a in 0..3 {
                g[a] += gc[a];
            }
        }
        Ok((val, g))
    }

    pub fn value(&self, d: [f64; 3]) -> Result<f64> {
        self.value_gradient(d).map(|(v, _)| v)
    }

    /// Minimum-image distance (plain distance in free space).
    pub fn distance(&self, d: [f64; 3]) -> f64 {
        norm(self.reduce(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{poisson_solve, GridSpec, ScalarField};

    #[test]
    fn correction_is_even_and_smooth_near_origin() {
        let l = 4.0;
        let a = ewald_correction([0.3, -0.2, 0.1], l);
        let b = ewald_correction([-0.3, 0.2, 0.1], l);
        assert!((a - b).abs() < 1e-13);
        // −ΔC = −1/V near the origin (the background), checked by differences
        let h = 1e-3;
        let c0 = ewald_correction([0.2, 0.1, 0.0], l);
        let mut lap = 0.0;
        for ax in 0..3 {
            let mut p = [0.2, 0.1, 0.0];
            let mut m = p;
            p[ax] += h;
            m[ax] -= h;
            lap += ewald_correction(p, l) + ewald_correction(m, l) - 2.0 * c0;
        }
        lap /= h * h;
        assert!((lap - 1.0 / (l * l * l)).abs() < 1e-5, "{lap}");
    }

    #[test]
    fn table_matches_direct_summation() {
        let l = 8.0;
        let k = PairKernel::periodic(l);
        let PairKernel::Periodic(t) = &k else { unreachable!() };
        for r in [[0.3, 1.7, -2.9], [3.99, -3.99, 0.01], [0.0, 0.0, 0.5]] {
            let (c, g) = t.eval(r);
            let exact = ewald_correction(r, l);
            assert!((c - exact).abs() < 1e-9, "{c} vs {exact}");
            let h = 1e-5;
            for ax in 0..3 {
                let mut p = r;
                let mut m = r;
                p[ax] += h;
                m[ax] -= h;
                let fd = (ewald_correction(p, l) - ewald_correction(m, l)) / (2.0 * h);
                assert!((g[ax] - fd).abs() < 1e-7, "axis {ax}: {} vs {fd}", g[ax]);
            }
        }
    }

    #[test]
    fn periodic_kernel_agrees_with_grid_poisson_solve() {
        // potential of a narrow Gaussian charge vs the Ewald kernel away from it
        let l = 6.0;
        let sigma = 0.25;
        let g = GridSpec::with_dealias(3, 64, l, 1.0).unwrap();
        let rho = ScalarField::from_fn(g, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            (-r2 / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma).powf(1.5)
        });
        let phi = poisson_solve(&rho).unwrap();
        let k = PairKernel::periodic(l);
        for flat in [g.flatten([48, 40, 20]), g.flatten([10, 60, 33]), g.flatten([0, 0, 0])] {
            let x = g.position(flat);
            // the Gaussian's own smearing: erf-screened Coulomb minus bare Coulomb
            let r = norm(x);
            let smear = -erfc(r / (2f64.sqrt() * sigma)) / (4.0 * PI * r);
            let shift = sigma * sigma / (2.0 * l * l * l);
            let expected = k.value(x).unwrap() + smear + shift;
            assert!((phi.values[flat] - expected).abs() < 1e-8, "{} vs {expected}", phi.values[flat]);
        }
    }

    #[test]
    fn large_box_limit_is_free_space() {
        let d = [0.5, 0.0, 0.0];
        let free = PairKernel::FreeSpace.value_gradient(d).unwrap();
        let per = PairKernel::periodic(200.0).value_gradient(d).unwrap();
        assert!((free.1[0] - per.1[0]).abs() < 1e-6 * free.1[0].abs());
        assert!(PairKernel::FreeSpace.value([0.0; 3]).is_err());
    }
}
