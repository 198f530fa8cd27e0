//! Problem definitions. Most follow the Moré–Garbow–Hillstrom and CUTEst
//! formulations; the known-Lipschitz problems all attain their minimum value 0
//! so that noiseless runs stay well conditioned in floating point near the solution.

use super::{Objective, Problem};

/// The full desk-scale suite, in a fixed order.
pub fn registry() -> Vec<Problem> {
    vec![
        diag_quadratic("quad1", vec![4.0], vec![1.5]),
        diag_quadratic("quad10", vec![1.0; 10], vec![1.0; 10]),
        diag_quadratic(
            "quad100",
            (0..100).map(|i| 1.0 + 99.0 * i as f64 / 99.0).collect(),
            vec![1.0; 100],
        ),
        diag_quadratic(
            "quad1000",
            (0..1000)
                .map(|i| 10f64.powf(3.0 * i as f64 / 999.0))
                .collect(),
            vec![1.0; 1000],
        ),
        dqdrtic(100),
        Problem::new(
            "rosenbrock2",
            vec![-1.2, 1.0],
            None,
            Some(0.0),
            ChainedRosenbrock,
        ),
        Problem::new(
            "ext_rosenbrock1000",
            alternating(1000, -1.2, 1.0),
            None,
            Some(0.0),
            ExtendedRosenbrock,
        ),
        Problem::new(
            "chained_rosenbrock10",
            alternating(10, -1.2, 1.0),
            None,
            Some(0.0),
            ChainedRosenbrock,
        ),
        Problem::new("beale", vec![1.0, 1.0], None, Some(0.0), Beale),
        Problem::new(
            "powell4",
            vec![3.0, -1.0, 0.0, 1.0],
            None,
            Some(0.0),
            ExtendedPowell,
        ),
        Problem::new(
            "ext_powell100",
            (0..100).map(|i| [3.0, -1.0, 0.0, 1.0][i % 4]).collect(),
            None,
            Some(0.0),
            ExtendedPowell,
        ),
        Problem::new("dixon_price10", vec![1.0; 10], None, Some(0.0), DixonPrice),
        Problem::new(
            "trigonometric10",
            vec![0.1; 10],
            None,
            Some(0.0),
            Trigonometric,
        ),
        Problem::new(
            "freudenstein_roth",
            vec![0.5, -2.0],
            None,
            Some(0.0),
            FreudensteinRoth,
        ),
        Problem::new("wood", vec![-3.0, -1.0, -3.0, -1.0], None, Some(0.0), Wood),
        Problem::new(
            "broyden_tridiag100",
            vec![-1.0; 100],
            None,
            Some(0.0),
            BroydenTridiagonal,
        ),
        Problem::new(
            "penalty1_10",
            (1..=10).map(f64::from).collect(),
            None,
            Some(0.0),
            PenaltyOne { a: 1e-5 },
        ),
        Problem::new(
            "vardim10",
            (1..=10).map(|i| 1.0 - f64::from(i) / 10.0).collect(),
            None,
            Some(0.0),
            VariablyDimensioned,
        ),
        Problem::new("himmelblau", vec![1.0, 1.0], None, Some(0.0), Himmelblau),
        Problem::new(
            "cosine1000",
            vec![1.0; 1000],
            None,
            Some(-999.0),
            CosineChain,
        ),
        Problem::new("arwhead100", vec![1.0; 100], None, Some(0.0), Arwhead),
        Problem::new("engval1_50", vec![2.0; 50], None, Some(0.0), Engval1),
        Problem::new(
            "styblinski_tang10",
            (0..10).map(|i| 0.5 * ((i % 5) as f64 - 2.0)).collect(),
            None,
            Some(-39.17 * 10.0),
            StyblinskiTang,
        ),
        Problem::new(
            "cosine_well20",
            (0..20).map(|i| 2.0 + 0.05 * i as f64).collect(),
            Some(2.0),
            Some(0.0),
            CosineWell {
                weights: (0..20).map(|i| 1.0 + i as f64 / 19.0).collect(),
            },
        ),
        Problem::new(
            "logcosh50",
            vec![0.0; 50],
            Some(1.0),
            Some(0.0),
            LogCosh {
                centers: (0..50).map(|i| 1.0 + (i % 3) as f64).collect(),
            },
        ),
        Problem::new(
            "quad_cos10",
            (0..10).map(|i| 3.0 + 0.1 * (i % 4) as f64).collect(),
            Some(3.0),
            Some(0.0),
            QuadCos,
        ),
    ]
}

fn alternating(n: usize, a: f64, b: f64) -> Vec<f64> {
    (0..n).map(|i| if i % 2 == 0 { a } else { b }).collect()
}

/// `1 - cos(x)` without cancellation near zero.
#[inline]
fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

/// phi(x) = 1/2 sum c_i x_i^2
struct DiagQuadratic {
    coeffs: Vec<f64>,
}

impl Objective for DiagQuadratic {
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.coeffs.iter().zip(x).map(|(c, v)| c * v * v).sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.coeffs.iter().zip(x).map(|(c, v)| c * v).collect()
    }
}

fn diag_quadratic(name: &str, coeffs: Vec<f64>, x0: Vec<f64>) -> Problem {
    let l = coeffs.iter().cloned().fold(0.0, f64::max);
    Problem::new(name, x0, Some(l), Some(0.0), DiagQuadratic { coeffs })
}

/// CUTEst DQDRTIC: sum_{i<n-2} x_i^2 + 100 x_{i+1}^2 + 100 x_{i+2}^2, which is separable.
fn dqdrtic(n: usize) -> Problem {
    let mut w = vec![0.0; n];
    for i in 0..n - 2 {
        w[i] += 1.0;
        w[i + 1] += 100.0;
        w[i + 2] += 100.0;
    }
    let coeffs: Vec<f64> = w.iter().map(|wi| 2.0 * wi).collect();
    diag_quadratic(&format!("dqdrtic{n}"), coeffs, vec![3.0; n])
}

/// sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2 over consecutive coordinates.
struct ChainedRosenbrock;

impl Objective for ChainedRosenbrock {
    fn value(&self, x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len().saturating_sub(1) {
            let t = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * t;
        }
        g
    }
}

/// Rosenbrock terms on disjoint pairs (x_{2i}, x_{2i+1}).
struct ExtendedRosenbrock;

impl Objective for ExtendedRosenbrock {
    fn value(&self, x: &[f64]) -> f64 {
        x.chunks_exact(2)
            .map(|p| 100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (i, p) in x.chunks_exact(2).enumerate() {
            let t = p[1] - p[0] * p[0];
            g[2 * i] = -400.0 * p[0] * t - 2.0 * (1.0 - p[0]);
            g[2 * i + 1] = 200.0 * t;
        }
        g
    }
}

struct Beale;

const BEALE_C: [f64; 3] = [1.5, 2.25, 2.625];

impl Objective for Beale {
    fn value(&self, x: &[f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        (1..=3)
            .map(|i| (BEALE_C[i - 1] - a + a * b.powi(i as i32)).powi(2))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (a, b) = (x[0], x[1]);
        let mut g = vec![0.0; 2];
        for i in 1..=3 {
            let t = BEALE_C[i - 1] - a + a * b.powi(i as i32);
            g[0] += 2.0 * t * (b.powi(i as i32) - 1.0);
            g[1] += 2.0 * t * a * i as f64 * b.powi(i as i32 - 1);
        }
        g
    }
}

/// Powell singular function on blocks of four coordinates.
struct ExtendedPowell;

impl Objective for ExtendedPowell {
    fn value(&self, x: &[f64]) -> f64 {
        x.chunks_exact(4)
            .map(|b| {
                (b[0] + 10.0 * b[1]).powi(2)
                    + 5.0 * (b[2] - b[3]).powi(2)
                    + (b[1] - 2.0 * b[2]).powi(4)
                    + 10.0 * (b[0] - b[3]).powi(4)
            })
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (i, b) in x.chunks_exact(4).enumerate() {
            let a = b[0] + 10.0 * b[1];
            let c = b[2] - b[3];
            let d = b[1] - 2.0 * b[2];
            let e = b[0] - b[3];
            g[4 * i] = 2.0 * a + 40.0 * e.powi(3);
            g[4 * i + 1] = 20.0 * a + 4.0 * d.powi(3);
            g[4 * i + 2] = 10.0 * c - 8.0 * d.powi(3);
            g[4 * i + 3] = -10.0 * c - 40.0 * e.powi(3);
        }
        g
    }
}

struct DixonPrice;

impl Objective for DixonPrice {
    fn value(&self, x: &[f64]) -> f64 {
        (x[0] - 1.0).powi(2)
            + (1..x.len())
                .map(|i| (i + 1) as f64 * (2.0 * x[i] * x[i] - x[i - 1]).powi(2))
                .sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        g[0] = 2.0 * (x[0] - 1.0);
        for i in 1..x.len() {
            let w = (i + 1) as f64;
            let t = 2.0 * x[i] * x[i] - x[i - 1];
            g[i] += w * 2.0 * t * 4.0 * x[i];
            g[i - 1] -= w * 2.0 * t;
        }
        g
    }
}

/// Moré–Garbow–Hillstrom trigonometric function.
struct Trigonometric;

impl Trigonometric {
    fn residuals(x: &[f64]) -> Vec<f64> {
        let n = x.len() as f64;
        let cos_sum: f64 = x.iter().map(|v| v.cos()).sum();
        x.iter()
            .enumerate()
            .map(|(i, v)| n - cos_sum + (i + 1) as f64 * (1.0 - v.cos()) - v.sin())
            .collect()
    }
}

impl Objective for Trigonometric {
    fn value(&self, x: &[f64]) -> f64 {
        Self::residuals(x).iter().map(|r| r * r).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = Self::residuals(x);
        let total: f64 = r.iter().sum();
        x.iter()
            .enumerate()
            .map(|(j, v)| {
                2.0 * v.sin() * total + 2.0 * r[j] * ((j + 1) as f64 * v.sin() - v.cos())
            })
            .collect()
    }
}

struct FreudensteinRoth;

impl Objective for FreudensteinRoth {
    fn value(&self, x: &[f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        let f1 = -13.0 + a + ((5.0 - b) * b - 2.0) * b;
        let f2 = -29.0 + a + ((b + 1.0) * b - 14.0) * b;
        f1 * f1 + f2 * f2
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (a, b) = (x[0], x[1]);
        let f1 = -13.0 + a + ((5.0 - b) * b - 2.0) * b;
        let f2 = -29.0 + a + ((b + 1.0) * b - 14.0) * b;
        let d1 = 10.0 * b - 3.0 * b * b - 2.0;
        let d2 = 3.0 * b * b + 2.0 * b - 14.0;
        vec![2.0 * (f1 + f2), 2.0 * (f1 * d1 + f2 * d2)]
    }
}

struct Wood;

impl Objective for Wood {
    fn value(&self, x: &[f64]) -> f64 {
        let [a, b, c, d] = [x[0], x[1], x[2], x[3]];
        100.0 * (b - a * a).powi(2)
            + (1.0 - a).powi(2)
            + 90.0 * (d - c * c).powi(2)
            + (1.0 - c).powi(2)
            + 10.1 * ((b - 1.0).powi(2) + (d - 1.0).powi(2))
            + 19.8 * (b - 1.0) * (d - 1.0)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let [a, b, c, d] = [x[0], x[1], x[2], x[3]];
        vec![
            -400.0 * a * (b - a * a) - 2.0 * (1.0 - a),
            200.0 * (b - a * a) + 20.2 * (b - 1.0) + 19.8 * (d - 1.0),
            -360.0 * c * (d - c * c) - 2.0 * (1.0 - c),
            180.0 * (d - c * c) + 20.2 * (d - 1.0) + 19.8 * (b - 1.0),
        ]
    }
}

/// Least-squares form of the Broyden tridiagonal system.
struct BroydenTridiagonal;

impl BroydenTridiagonal {
    fn residual(x: &[f64], i: usize) -> f64 {
        let prev = if i > 0 { x[i - 1] } else { 0.0 };
        let next = if i + 1 < x.len() { x[i + 1] } else { 0.0 };
        (3.0 - 2.0 * x[i]) * x[i] - prev - 2.0 * next + 1.0
    }
}

impl Objective for BroydenTridiagonal {
    fn value(&self, x: &[f64]) -> f64 {
        (0..x.len()).map(|i| Self::residual(x, i).powi(2)).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut g = vec![0.0; n];
        for i in 0..n {
            let r2 = 2.0 * Self::residual(x, i);
            g[i] += r2 * (3.0 - 4.0 * x[i]);
            if i > 0 {
                g[i - 1] -= r2;
            }
            if i + 1 < n {
                g[i + 1] -= 2.0 * r2;
            }
        }
        g
    }
}

struct PenaltyOne {
    a: f64,
}

impl Objective for PenaltyOne {
    fn value(&self, x: &[f64]) -> f64 {
        let sq: f64 = x.iter().map(|v| v * v).sum();
        self.a * x.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>() + (sq - 0.25).powi(2)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let t = x.iter().map(|v| v * v).sum::<f64>() - 0.25;
        x.iter()
            .map(|v| 2.0 * self.a * (v - 1.0) + 4.0 * v * t)
            .collect()
    }
}

struct VariablyDimensioned;

impl Objective for VariablyDimensioned {
    fn value(&self, x: &[f64]) -> f64 {
        let r: f64 = x
            .iter()
            .enumerate()
            .map(|(i, v)| (i + 1) as f64 * (v - 1.0))
            .sum();
        x.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>() + r * r + r.powi(4)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r: f64 = x
            .iter()
            .enumerate()
            .map(|(i, v)| (i + 1) as f64 * (v - 1.0))
            .sum();
        let outer = 2.0 * r + 4.0 * r.powi(3);
        x.iter()
            .enumerate()
            .map(|(i, v)| 2.0 * (v - 1.0) + outer * (i + 1) as f64)
            .collect()
    }
}

struct Himmelblau;

impl Objective for Himmelblau {
    fn value(&self, x: &[f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        (a * a + b - 11.0).powi(2) + (a + b * b - 7.0).powi(2)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (a, b) = (x[0], x[1]);
        let u = a * a + b - 11.0;
        let v = a + b * b - 7.0;
        vec![4.0 * a * u + 2.0 * v, 2.0 * u + 4.0 * b * v]
    }
}

/// CUTEst COSINE: sum_i cos(-x_{i+1}/2 + x_i^2).
struct CosineChain;

impl Objective for CosineChain {
    fn value(&self, x: &[f64]) -> f64 {
        x.windows(2).map(|w| (-0.5 * w[1] + w[0] * w[0]).cos()).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len().saturating_sub(1) {
            let s = (-0.5 * x[i + 1] + x[i] * x[i]).sin();
            g[i] -= 2.0 * x[i] * s;
            g[i + 1] += 0.5 * s;
        }
        g
    }
}

/// CUTEst ARWHEAD.
struct Arwhead;

impl Objective for Arwhead {
    fn value(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let last = x[n - 1] * x[n - 1];
        x[..n - 1]
            .iter()
            .map(|v| -4.0 * v + 3.0 + (v * v + last).powi(2))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let xn = x[n - 1];
        let mut g = vec![0.0; n];
        for i in 0..n - 1 {
            let t = x[i] * x[i] + xn * xn;
            g[i] = -4.0 + 4.0 * x[i] * t;
            g[n - 1] += 4.0 * xn * t;
        }
        g
    }
}

/// CUTEst ENGVAL1.
struct Engval1;

impl Objective for Engval1 {
    fn value(&self, x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| (w[0] * w[0] + w[1] * w[1]).powi(2) - 4.0 * w[0] + 3.0)
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len().saturating_sub(1) {
            let t = x[i] * x[i] + x[i + 1] * x[i + 1];
            g[i] += 4.0 * x[i] * t - 4.0;
            g[i + 1] += 4.0 * x[i + 1] * t;
        }
        g
    }
}

struct StyblinskiTang;

impl Objective for StyblinskiTang {
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x
            .iter()
            .map(|v| v.powi(4) - 16.0 * v * v + 5.0 * v)
            .sum::<f64>()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| 2.0 * v.powi(3) - 16.0 * v + 2.5).collect()
    }
}

/// sum_i w_i (1 - cos x_i): nonconvex, gradient Lipschitz with constant max w_i.
struct CosineWell {
    weights: Vec<f64>,
}

impl Objective for CosineWell {
    fn value(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(x)
            .map(|(w, v)| w * one_minus_cos(*v))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.weights.iter().zip(x).map(|(w, v)| w * v.sin()).collect()
    }
}

/// sum_i log cosh(x_i - c_i): convex, gradient 1-Lipschitz.
struct LogCosh {
    centers: Vec<f64>,
}

fn log_cosh(z: f64) -> f64 {
    let a = z.abs();
    if a > 20.0 {
        a - std::f64::consts::LN_2 + (-2.0 * a).exp().ln_1p()
    } else {
        let s = (0.5 * z).sinh();
        (2.0 * s * s).ln_1p()
    }
}

impl Objective for LogCosh {
    fn value(&self, x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(x)
            .map(|(c, v)| log_cosh(v - c))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.centers
            .iter()
            .zip(x)
            .map(|(c, v)| (v - c).tanh())
            .collect()
    }
}

/// sum_i x_i^2/2 + 2 (1 - cos x_i): curvature 1 + 2 cos x_i spans [-1, 3].
struct QuadCos;

impl Objective for QuadCos {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| 0.5 * v * v + 2.0 * one_minus_cos(*v)).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v + 2.0 * v.sin()).collect()
    }
}
