//! Seeded noisy oracles.
//!
//! Function estimates carry uniform noise on `[-eps_f, eps_f]`. Gradient
//! estimates are perturbed by a vector drawn uniformly from a Euclidean ball;
//! its radius is either the fixed `eps_g` or, in enforcement mode, the
//! iterate-dependent bound `max{eps_g, sigma_phi * alpha_bar_p * min(|grad|, |grad|^((1+p)/2))}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::testbed::ScaledProblem;
use crate::vecops::norm2;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub eps_f: f64,
    pub eps_g: f64,
    pub seed: u64,
    #[serde(default)]
    pub enforce_assumption4: bool,
    #[serde(default)]
    pub sigma_phi: f64,
    #[serde(default = "one")]
    pub alpha_bar_p: f64,
    #[serde(default = "one")]
    pub p: f64,
}

fn one() -> f64 {
    1.0
}

impl NoiseConfig {
    /// Plain bounded noise: uniform function noise and fixed-radius gradient noise.
    pub fn bounded(eps_f: f64, eps_g: f64, seed: u64) -> Self {
        NoiseConfig {
            eps_f,
            eps_g,
            seed,
            enforce_assumption4: false,
            sigma_phi: 0.0,
            alpha_bar_p: 1.0,
            p: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.eps_f >= 0.0) || !self.eps_f.is_finite() {
            return bad("eps_f must be finite and >= 0");
        }
        if !(self.eps_g >= 0.0) || !self.eps_g.is_finite() {
            return bad("eps_g must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&self.sigma_phi) {
            return bad("sigma_phi must lie in [0, 1)");
        }
        if self.enforce_assumption4 {
            if !(self.alpha_bar_p > 0.0 && self.alpha_bar_p <= 1.0) {
                return bad("alpha_bar_p must lie in (0, 1]");
            }
            if !(self.p >= 0.0) {
                return bad("p must be >= 0");
            }
        }
        Ok(())
    }

    /// Radius of the gradient-noise ball at a point with true gradient norm `true_norm`.
    pub fn gradient_radius(&self, true_norm: f64) -> f64 {
        if self.enforce_assumption4 {
            let shrink = true_norm.min(true_norm.powf(0.5 * (1.0 + self.p)));
            self.eps_g.max(self.sigma_phi * self.alpha_bar_p * shrink)
        } else {
            self.eps_g
        }
    }
}

/// A noisy view of a scaled problem. One instance per run; not shared across threads.
pub struct NoisyOracle {
    problem: ScaledProblem,
    cfg: NoiseConfig,
    rng: ChaCha8Rng,
    n_f_evals: u64,
    n_g_evals: u64,
}

impl NoisyOracle {
    pub fn new(problem: ScaledProblem, cfg: NoiseConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(NoisyOracle {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            problem,
            cfg,
            n_f_evals: 0,
            n_g_evals: 0,
        })
    }

    pub fn problem(&self) -> &ScaledProblem {
        &self.problem
    }

    pub fn config(&self) -> &NoiseConfig {
        &self.cfg
    }

    pub fn n_f_evals(&self) -> u64 {
        self.n_f_evals
    }

    pub fn n_g_evals(&self) -> u64 {
        self.n_g_evals
    }

    /// `phi(x) + u` with `u` uniform on `[-eps_f, eps_f]`, drawn fresh on every call.
    pub fn noisy_f(&mut self, x: &[f64]) -> f64 {
        self.n_f_evals += 1;
        let u: f64 = self.rng.random_range(-1.0..=1.0);
        self.problem.value(x) + self.cfg.eps_f * u
    }

    pub fn noisy_grad(&mut self, x: &[f64]) -> Vec<f64> {
        self.noisy_grad_with_truth(x).0
    }

    /// Noisy gradient together with the exact gradient it was built from.
    /// The exact gradient is returned for bookkeeping only.
    pub fn noisy_grad_with_truth(&mut self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.n_g_evals += 1;
        let truth = self.problem.gradient(x);
        let radius = self.cfg.gradient_radius(norm2(&truth));
        let mut g = truth.clone();
        if radius > 0.0 {
            let e = sample_ball(&mut self.rng, x.len(), radius);
            for (gi, ei) in g.iter_mut().zip(&e) {
                *gi += ei;
            }
        }
        (g, truth)
    }
}

/// Uniform sample from the Euclidean ball of the given radius in `R^n`:
/// a Gaussian direction normalized to the sphere, scaled by `radius * U^(1/n)`.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nz = norm2(&z);
        if nz > 0.0 && nz.is_finite() {
            let u: f64 = rng.random();
            let r = radius * u.powf(1.0 / n as f64);
            return z.into_iter().map(|v| v * r / nz).collect();
        }
    }
}

/// Whether `(1 - sigma_phi)|grad| <= |g| <= (1 + sigma_phi)|grad|`.
pub fn sanity_bounds(g: &[f64], true_grad: &[f64], sigma_phi: f64) -> bool {
    let gn = norm2(g);
    let tn = norm2(true_grad);
    (1.0 - sigma_phi) * tn <= gn && gn <= (1.0 + sigma_phi) * tn
}
