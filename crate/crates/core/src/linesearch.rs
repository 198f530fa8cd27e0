//! Backtracking Armijo search relaxed by the function-noise level.
//!
//! The step `alpha = theta^j` uses the smallest `j >= 0` with
//! `f(x + alpha d) < f(x) + eta * alpha * g'd + 2 eps_f`.
//! `f(x)` is sampled once per call and reused for every trial.

use serde::{Deserialize, Serialize};

use crate::noise::NoisyOracle;
use crate::vecops::{axpy, dot};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    pub eta: f64,
    pub theta: f64,
    pub eps_f: f64,
    pub j_max: u32,
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 0.5) {
            return Err(Error::InvalidConfig("eta must lie in (0, 1/2]".into()));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidConfig("theta must lie in (0, 1)".into()));
        }
        if !(self.eps_f >= 0.0) {
            return Err(Error::InvalidConfig("eps_f must be >= 0".into()));
        }
        if self.j_max == 0 {
            return Err(Error::InvalidConfig("j_max must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub j: u32,
    pub f_at_x: f64,
    pub f_at_trial: f64,
    pub n_trials: u32,
    /// No trial passed; the step `theta^j_max` is returned anyway.
    pub capped: bool,
    /// The accepted (or final) trial point `x + alpha d`.
    pub x_trial: Vec<f64>,
}

/// Run the backtracking search from `x` along `d` using the gradient estimate `g`.
///
/// Non-finite trial values count as failed trials.
pub fn backtrack(
    oracle: &mut NoisyOracle,
    x: &[f64],
    d: &[f64],
    g: &[f64],
    params: &LineSearchParams,
) -> LineSearchResult {
    let f_at_x = oracle.noisy_f(x);
    let slope = params.eta * dot(g, d);
    let slack = 2.0 * params.eps_f;
    let mut alpha = 1.0;
    let mut j = 0;
    loop {
        let x_trial = axpy(x, alpha, d);
        let f_trial = oracle.noisy_f(&x_trial);
        let accepted = f_trial.is_finite() && f_trial < f_at_x + alpha * slope + slack;
        if accepted || j == params.j_max {
            return LineSearchResult {
                alpha,
                j,
                f_at_x,
                f_at_trial: f_trial,
                n_trials: j + 1,
                capped: !accepted,
                x_trial,
            };
        }
        j += 1;
        alpha = params.theta.powi(j as i32);
    }
}

/// Largest backtrack count admitted by the step-size floor `alpha_bar`:
/// `floor([log_theta(alpha_bar)]_+ + 1)`.
pub fn backtrack_bound(alpha_bar: f64, theta: f64) -> Result<u32> {
    if !(alpha_bar > 0.0) {
        return Err(Error::InvalidConfig("alpha_bar must be > 0".into()));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidConfig("theta must lie in (0, 1)".into()));
    }
    let j_bar = (alpha_bar.ln() / theta.ln()).max(0.0);
    Ok((j_bar + 1.0).floor() as u32)
}
