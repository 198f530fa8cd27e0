//! Search-direction engines: steepest descent, PRP+ nonlinear CG and
//! L-BFGS with cautious pair storage.
//!
//! Calling order within one solver iteration `k -> k+1`:
//! `update_state(x_k, x_{k+1}, g_k, g_{k+1}, restarted_k)`, then
//! `propose(g_{k+1})`; if the solver overrides the proposal it calls
//! `reset_on_restart`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::vecops::{axpy_inplace, dot, neg, norm2, sub};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Gd,
    Nlcg,
    Lbfgs,
}

/// CG update rule. `Zero` forces `beta = 0` and exists for reduction tests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaRule {
    #[default]
    PrpPlus,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub kind: EngineKind,
    #[serde(default = "default_memory")]
    pub memory: usize,
    #[serde(default = "default_eps_sy")]
    pub eps_sy: f64,
    /// Keep L-BFGS pairs when the solver forces a restart.
    #[serde(default = "default_keep")]
    pub keep_memory: bool,
    #[serde(default)]
    pub beta_rule: BetaRule,
}

fn default_memory() -> usize {
    10
}
fn default_eps_sy() -> f64 {
    1e-4
}
fn default_keep() -> bool {
    true
}

impl EngineConfig {
    pub fn new(kind: EngineKind) -> Self {
        EngineConfig {
            kind,
            memory: default_memory(),
            eps_sy: default_eps_sy(),
            keep_memory: true,
            beta_rule: BetaRule::PrpPlus,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == EngineKind::Lbfgs && self.memory == 0 {
            return Err(Error::InvalidConfig("L-BFGS memory must be >= 1".into()));
        }
        if !(self.eps_sy >= 0.0) {
            return Err(Error::InvalidConfig("eps_sy must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct DirectionEngine {
    cfg: EngineConfig,
    last_proposed: Option<Vec<f64>>,
    d_prev: Option<Vec<f64>>,
    g_prev: Option<Vec<f64>>,
    pairs: VecDeque<(Vec<f64>, Vec<f64>)>,
}

impl DirectionEngine {
    pub fn new(cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(DirectionEngine {
            cfg,
            last_proposed: None,
            d_prev: None,
            g_prev: None,
            pairs: VecDeque::new(),
        })
    }

    pub fn kind(&self) -> EngineKind {
        self.cfg.kind
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    /// Stored L-BFGS pairs, oldest first.
    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.pairs.iter().map(|(s, y)| (s.as_slice(), y.as_slice()))
    }

    pub fn propose(&mut self, g_new: &[f64]) -> Vec<f64> {
        let d = match self.cfg.kind {
            EngineKind::Gd => neg(g_new),
            EngineKind::Nlcg => self.propose_cg(g_new),
            EngineKind::Lbfgs => two_loop(&self.pairs, g_new),
        };
        self.last_proposed = Some(d.clone());
        d
    }

    fn propose_cg(&self, g_new: &[f64]) -> Vec<f64> {
        let (Some(d_prev), Some(g_prev)) = (&self.d_prev, &self.g_prev) else {
            return neg(g_new);
        };
        let beta = match self.cfg.beta_rule {
            BetaRule::PrpPlus => prp_plus_beta(g_new, g_prev),
            BetaRule::Zero => 0.0,
        };
        let mut d = neg(g_new);
        if beta != 0.0 {
            axpy_inplace(&mut d, beta, d_prev);
        }
        d
    }

    /// Absorb the step just taken. `restarted` says whether the direction
    /// used for it was the forced `-g_old`.
    pub fn update_state(
        &mut self,
        x_old: &[f64],
        x_new: &[f64],
        g_old: &[f64],
        g_new: &[f64],
        restarted: bool,
    ) {
        match self.cfg.kind {
            EngineKind::Gd => {}
            EngineKind::Nlcg => {
                let d_taken = match (&self.last_proposed, restarted) {
                    (Some(d), false) => d.clone(),
                    _ => neg(g_old),
                };
                self.d_prev = Some(d_taken);
                self.g_prev = Some(g_old.to_vec());
            }
            EngineKind::Lbfgs => {
                let s = sub(x_new, x_old);
                let y = sub(g_new, g_old);
                if cautious_accept(&s, &y, self.cfg.eps_sy) {
                    if self.pairs.len() == self.cfg.memory {
                        self.pairs.pop_front();
                    }
                    self.pairs.push_back((s, y));
                }
            }
        }
    }

    pub fn reset_on_restart(&mut self) {
        match self.cfg.kind {
            EngineKind::Gd => {}
            EngineKind::Nlcg => {
                self.d_prev = None;
                self.g_prev = None;
            }
            EngineKind::Lbfgs => {
                if !self.cfg.keep_memory {
                    self.pairs.clear();
                }
            }
        }
    }
}

/// `max{0, g_new'(g_new - g_old) / |g_old|^2}`, zero when `g_old = 0`.
pub fn prp_plus_beta(g_new: &[f64], g_old: &[f64]) -> f64 {
    let denom = dot(g_old, g_old);
    if denom == 0.0 {
        return 0.0;
    }
    let num = dot(g_new, g_new) - dot(g_new, g_old);
    (num / denom).max(0.0)
}

/// Cautious storage test `s'y >= eps_sy |s| |y|`; a zero step is never stored.
pub fn cautious_accept(s: &[f64], y: &[f64], eps_sy: f64) -> bool {
    let ns = norm2(s);
    let ny = norm2(y);
    if ns == 0.0 || ny == 0.0 {
        return false;
    }
    let sy = dot(s, y);
    sy > 0.0 && sy >= eps_sy * ns * ny
}

/// `-H g` via the two-loop recursion, `H_0 = gamma I` with
/// `gamma = s'y / y'y` of the newest pair (identity when empty).
pub fn two_loop(pairs: &VecDeque<(Vec<f64>, Vec<f64>)>, g: &[f64]) -> Vec<f64> {
    if pairs.is_empty() {
        return neg(g);
    }
    let mut q = g.to_vec();
    let mut a = vec![0.0; pairs.len()];
    for (i, (s, y)) in pairs.iter().enumerate().rev() {
        let rho = 1.0 / dot(y, s);
        a[i] = rho * dot(s, &q);
        axpy_inplace(&mut q, -a[i], y);
    }
    let (s, y) = pairs.back().expect("nonempty");
    let gamma = dot(s, y) / dot(y, y);
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for (i, (s, y)) in pairs.iter().enumerate() {
        let rho = 1.0 / dot(y, s);
        let b = rho * dot(y, &q);
        axpy_inplace(&mut q, a[i] - b, s);
    }
    neg(&q)
}
