//! Fixed battery of smooth periodic test functions for the weak distance
//! between an empirical measure and a density.

use std::f64::consts::PI;

use mfsc_core::fields::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    Cos([i64; 3]),
    Sin([i64; 3]),
    /// Unnormalized periodized Gaussian `exp(−|x − c|²/2s²)` (minimum image).
    Gaussian { center: [f64; 3], width: f64 },
}

impl TestFunction {
    pub fn name(&self) -> String {
        match self {
            TestFunction::Cos(m) => format!("cos_{}{}{}", m[0], m[1], m[2]),
            TestFunction::Sin(m) => format!("sin_{}{}{}", m[0], m[1], m[2]),
            TestFunction::Gaussian { center, width } => {
                format!("gauss_{}_{}_{}_w{}", center[0], center[1], center[2], width)
            }
        }
    }

    pub fn eval(&self, x: [f64; 3], box_length: f64) -> f64 {
        let k = 2.0 * PI / box_length;
        match self {
            TestFunction::Cos(m) => (k * dot(m, x)).cos(),
            TestFunction::Sin(m) => (k * dot(m, x)).sin(),
            TestFunction::Gaussian { center, width } => {
                let r2: f64 = (0..3)
                    .map(|a| {
                        let d = x[a] - center[a];
                        (d - box_length * (d / box_length).round()).powi(2)
                    })
                    .sum();
                (-r2 / (2.0 * width * width)).exp()
            }
        }
    }
}

fn dot(m: &[i64; 3], x: [f64; 3]) -> f64 {
    m[0] as f64 * x[0] + m[1] as f64 * x[1] + m[2] as f64 * x[2]
}

/// Six low trigonometric modes and two Gaussians.
pub fn default_battery() -> Vec<TestFunction> {
    vec![
        TestFunction::Cos([1, 0, 0]),
        TestFunction::Sin([1, 0, 0]),
        TestFunction::Cos([0, 1, 0]),
        TestFunction::Cos([0, 0, 1]),
        TestFunction::Cos([1, 1, 0]),
        TestFunction::Cos([1, 1, 1]),
        TestFunction::Gaussian {
            center: [0.0; 3],
            width: 1.0,
        },
        TestFunction::Gaussian {
            center: [1.0, -0.5, 0.0],
            width: 0.75,
        },
    ]
}

/// `|(1/N)Σφ(x_j) − ∫φρ|` for every test function.
pub fn weak_distances(battery: &[TestFunction], positions: &[[f64; 3]], rho: &ScalarField) -> Vec<f64> {
    let grid = rho.grid;
    let l = grid.box_length();
    let n = positions.len() as f64;
    battery
        .iter()
        .map(|f| {
            let empirical = positions.iter().map(|&x| f.eval(x, l)).sum::<f64>() / n;
            let density: f64 = (0..grid.cells())
                .map(|i| f.eval(grid.position(i), l) * rho.values[i])
                .sum::<f64>()
                * grid.cell_volume();
            (empirical - density).abs()
        })
        .collect()
}
