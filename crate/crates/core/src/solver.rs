//! The iteration driver: noisy line search along engine-proposed directions,
//! with the two-clause restart test forcing `d = -g` when a proposal lacks
//! sufficient descent or is too long.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::directions::{BetaRule, DirectionEngine, EngineConfig, EngineKind};
use crate::linesearch::{backtrack, LineSearchParams};
use crate::noise::{NoiseConfig, NoisyOracle};
use crate::testbed::ScaledProblem;
use crate::theory;
use crate::vecops::{all_finite, dot, neg, norm2, norm_inf};
use crate::{Error, Result};

/// The five method families. Restarted variants carry `(p, kappa_d)` with `sigma_d = 1/kappa_d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum MethodSpec {
    Gd,
    Nlcg,
    Lbfgs,
    Nlcgr { p: f64, kappa: f64 },
    Lbfgsr { p: f64, kappa: f64 },
}

pub const DEFAULT_P: f64 = 0.75;
pub const DEFAULT_KAPPA: f64 = 1e6;

impl MethodSpec {
    pub fn family(&self) -> &'static str {
        match self {
            MethodSpec::Gd => "gd",
            MethodSpec::Nlcg => "nlcg",
            MethodSpec::Lbfgs => "lbfgs",
            MethodSpec::Nlcgr { .. } => "nlcgr",
            MethodSpec::Lbfgsr { .. } => "lbfgsr",
        }
    }

    /// `(p, kappa)` of restarted variants.
    pub fn grid_cell(&self) -> Option<(f64, f64)> {
        match *self {
            MethodSpec::Nlcgr { p, kappa } | MethodSpec::Lbfgsr { p, kappa } => Some((p, kappa)),
            _ => None,
        }
    }

    pub fn config(&self) -> SolverConfig {
        match *self {
            MethodSpec::Gd => SolverConfig::gd(),
            MethodSpec::Nlcg => SolverConfig::nlcg(),
            MethodSpec::Lbfgs => SolverConfig::lbfgs(),
            MethodSpec::Nlcgr { p, kappa } => SolverConfig::nlcgr(p, kappa),
            MethodSpec::Lbfgsr { p, kappa } => SolverConfig::lbfgsr(p, kappa),
        }
    }

    /// The five default configurations: gd, nlcg, nlcgr, lbfgs, lbfgsr.
    pub fn defaults() -> Vec<MethodSpec> {
        vec![
            MethodSpec::Gd,
            MethodSpec::Nlcg,
            MethodSpec::Nlcgr { p: DEFAULT_P, kappa: DEFAULT_KAPPA },
            MethodSpec::Lbfgs,
            MethodSpec::Lbfgsr { p: DEFAULT_P, kappa: DEFAULT_KAPPA },
        ]
    }
}

/// Labels look like `gd` or `nlcgr_p0.75_k1e6`.
impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.grid_cell() {
            None => f.write_str(self.family()),
            Some((p, kappa)) => write!(f, "{}_p{}_k{:e}", self.family(), p, kappa),
        }
    }
}

/// Accepts `gd`, `nlcgr`, `nlcgr_p0.5_k1e3` and `nlcgr:0.5:1e3`.
impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::UnknownMethod(s.to_string());
        let s = s.trim();
        let (family, rest) = match s.find([':', '_']) {
            Some(i) => (&s[..i], Some(&s[i + 1..])),
            None => (s, None),
        };
        let (p, kappa) = match rest {
            None => (DEFAULT_P, DEFAULT_KAPPA),
            Some(rest) => {
                let parts: Vec<&str> = rest.split([':', '_']).collect();
                let [p, k] = parts.as_slice() else {
                    return Err(bad());
                };
                let p = p.strip_prefix('p').unwrap_or(p).parse::<f64>().map_err(|_| bad())?;
                let k = k.strip_prefix('k').unwrap_or(k).parse::<f64>().map_err(|_| bad())?;
                (p, k)
            }
        };
        let spec = match family.to_ascii_lowercase().as_str() {
            "gd" if rest.is_none() => MethodSpec::Gd,
            "nlcg" if rest.is_none() => MethodSpec::Nlcg,
            "lbfgs" if rest.is_none() => MethodSpec::Lbfgs,
            "nlcgr" => MethodSpec::Nlcgr { p, kappa },
            "lbfgsr" => MethodSpec::Lbfgsr { p, kappa },
            _ => return Err(bad()),
        };
        spec.config().validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eta: f64,
    pub theta: f64,
    pub sigma_d: f64,
    #[serde(with = "crate::serde_ext")]
    pub kappa_d: f64,
    pub p: f64,
    pub eps_f: f64,
    pub eps_g: f64,
    pub max_iter: usize,
    pub j_max: u32,
    pub grad_tol_floor: f64,
    pub engine: EngineConfig,
    /// When set, gradient noise is drawn with the iterate-dependent radius
    /// `max{eps_g, sigma_phi * alpha_bar * min(|grad|, |grad|^((1+p)/2))}`.
    #[serde(default)]
    pub assumption4_sigma_phi: Option<f64>,
}

impl SolverConfig {
    fn base(kind: EngineKind, sigma_d: f64, kappa_d: f64, p: f64) -> Self {
        SolverConfig {
            eta: 0.5,
            theta: 0.5,
            sigma_d,
            kappa_d,
            p,
            eps_f: 0.0,
            eps_g: 0.0,
            max_iter: 1000,
            j_max: 50,
            grad_tol_floor: 1e-8,
            engine: EngineConfig::new(kind),
            assumption4_sigma_phi: None,
        }
    }

    pub fn gd() -> Self {
        Self::base(EngineKind::Gd, 1.0, 1.0, 1.0)
    }

    pub fn nlcg() -> Self {
        Self::base(EngineKind::Nlcg, 0.0, f64::INFINITY, 1.0)
    }

    pub fn lbfgs() -> Self {
        Self::base(EngineKind::Lbfgs, 0.0, f64::INFINITY, 1.0)
    }

    pub fn nlcgr(p: f64, kappa: f64) -> Self {
        Self::base(EngineKind::Nlcg, 1.0 / kappa, kappa, p)
    }

    pub fn lbfgsr(p: f64, kappa: f64) -> Self {
        Self::base(EngineKind::Lbfgs, 1.0 / kappa, kappa, p)
    }

    /// Set `eps_f` and the matching `eps_g = sqrt(eps_f)`.
    pub fn with_noise(mut self, eps_f: f64) -> Self {
        self.eps_f = eps_f;
        self.eps_g = eps_f.sqrt();
        self
    }

    pub fn with_beta_rule(mut self, rule: BetaRule) -> Self {
        self.engine.beta_rule = rule;
        self
    }

    pub fn line_search(&self) -> LineSearchParams {
        LineSearchParams {
            eta: self.eta,
            theta: self.theta,
            eps_f: self.eps_f,
            j_max: self.j_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        self.line_search().validate()?;
        self.engine.validate()?;
        if !(0.0..=1.0).contains(&self.sigma_d) {
            return bad("sigma_d must lie in [0, 1]");
        }
        if !(self.kappa_d >= 1.0) {
            return bad("kappa_d must be >= 1 or infinite");
        }
        if !(self.p >= 0.0) || !self.p.is_finite() {
            return bad("p must be finite and >= 0");
        }
        if !(self.eps_g >= 0.0) || !self.eps_g.is_finite() {
            return bad("eps_g must be finite and >= 0");
        }
        if !(self.grad_tol_floor >= 0.0) {
            return bad("grad_tol_floor must be >= 0");
        }
        if let Some(s) = self.assumption4_sigma_phi {
            if !(0.0..1.0).contains(&s) {
                return bad("sigma_phi must lie in [0, 1)");
            }
        }
        Ok(())
    }

    /// Termination threshold on the noisy gradient, `max{2 eps_g, floor}`.
    pub fn stop_tol(&self) -> f64 {
        (2.0 * self.eps_g).max(self.grad_tol_floor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxIter,
    SpuriousInitialStop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub alpha: f64,
    pub j: u32,
    pub n_trials: u32,
    /// The restart test fired on the proposal for `d_{k+1}`, so `d_{k+1} = -g_{k+1}`.
    pub restarted: bool,
    /// `d_k = -g_k` was used at this iteration (first iteration or forced by a restart).
    pub steepest: bool,
    pub capped_ls: bool,
    pub g_norm_inf: f64,
    pub g_norm: f64,
    pub true_grad_norm_inf: f64,
    pub true_grad_norm: f64,
    /// `phi(x_k)` and `phi(x_{k+1})` of the scaled objective.
    pub f_true: f64,
    pub f_true_next: f64,
    pub g_dot_d: f64,
    pub d_norm: f64,
    pub f_evals_so_far: u64,
    pub g_evals_so_far: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub problem: String,
    pub dim: usize,
    pub method: String,
    pub config: SolverConfig,
    pub noise: NoiseConfig,
    pub seed: u64,
    pub status: Status,
    /// A non-finite iterate or gradient ended the run early (reported as `MaxIter`).
    pub aborted: bool,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    pub restart_fraction: f64,
    pub final_x: Vec<f64>,
    pub solved: bool,
    /// Index of the first iterate passing the success test.
    pub first_success: Option<usize>,
    pub n_f_evals: u64,
    pub n_g_evals: u64,
    pub f0: f64,
    pub f_final: f64,
    pub final_true_grad_norm_inf: f64,
    pub final_true_grad_norm: f64,
    /// Lipschitz constant and lower bound of the scaled objective, when known.
    pub lipschitz: Option<f64>,
    pub f_low: Option<f64>,
}

impl RunResult {
    /// Gradient evaluations spent up to the first successful iterate.
    pub fn cost(&self) -> Option<u64> {
        self.first_success.map(|i| i as u64 + 1)
    }

    pub fn discarded(&self) -> bool {
        self.status == Status::SpuriousInitialStop
    }
}

/// `g'd >= -sigma_d |g|^(1+p)` or `|d| >= kappa_d |g|^((1+p)/2)`.
pub fn restart_check(g: &[f64], d: &[f64], sigma_d: f64, kappa_d: f64, p: f64) -> bool {
    let gn = norm2(g);
    if dot(g, d) >= -sigma_d * gn.powf(1.0 + p) {
        return true;
    }
    kappa_d.is_finite() && norm2(d) >= kappa_d * gn.powf(0.5 * (1.0 + p))
}

/// `norm <= eps_g + max{2 eps_g, floor}`.
pub fn success_test(true_grad_inf_norm: f64, eps_g: f64, floor: f64) -> bool {
    true_grad_inf_norm <= eps_g + (2.0 * eps_g).max(floor)
}

/// Classify a stop at `x_0`: `None` when the termination test does not fire,
/// `SpuriousInitialStop` when it fires but the success test fails there.
pub fn initial_stop(g0_norm_inf: f64, true_norm_inf: f64, cfg: &SolverConfig) -> Option<Status> {
    if g0_norm_inf > cfg.stop_tol() {
        return None;
    }
    if success_test(true_norm_inf, cfg.eps_g, cfg.grad_tol_floor) {
        Some(Status::Converged)
    } else {
        Some(Status::SpuriousInitialStop)
    }
}

/// Noise configuration a run will use for the given seed.
pub fn noise_config(problem: &ScaledProblem, cfg: &SolverConfig, seed: u64) -> Result<NoiseConfig> {
    let mut noise = NoiseConfig::bounded(cfg.eps_f, cfg.eps_g, seed);
    if let Some(sigma_phi) = cfg.assumption4_sigma_phi {
        let l = problem.lipschitz().ok_or_else(|| Error::MissingProblemData {
            problem: problem.name().to_string(),
            what: "Lipschitz constant",
            purpose: "noise enforcement",
        })?;
        let ab = |sigma_d, kappa_d, p| theory::alpha_bar_raw(cfg.eta, sigma_d, kappa_d, p, sigma_phi, l);
        let alpha_p = ab(cfg.sigma_d, cfg.kappa_d, cfg.p);
        let alpha_1 = ab(1.0, 1.0, 1.0);
        noise.enforce_assumption4 = true;
        noise.sigma_phi = sigma_phi;
        noise.alpha_bar_p = if alpha_p > 0.0 { alpha_p.min(alpha_1) } else { alpha_1 };
        noise.p = cfg.p;
    }
    Ok(noise)
}

pub fn run(problem: &ScaledProblem, cfg: &SolverConfig, seed: u64) -> Result<RunResult> {
    run_labeled(problem, cfg, seed, &default_label(cfg))
}

fn default_label(cfg: &SolverConfig) -> String {
    match cfg.engine.kind {
        EngineKind::Gd => "gd".into(),
        EngineKind::Nlcg => "nlcg".into(),
        EngineKind::Lbfgs => "lbfgs".into(),
    }
}

/// Run with an explicit method label stored in the result.
pub fn run_labeled(
    problem: &ScaledProblem,
    cfg: &SolverConfig,
    seed: u64,
    label: &str,
) -> Result<RunResult> {
    cfg.validate()?;
    let x0 = problem.x0().to_vec();
    let noise = noise_config(problem, cfg, seed)?;
    let mut oracle = NoisyOracle::new(problem.clone(), noise.clone())?;
    let mut engine = DirectionEngine::new(cfg.engine.clone())?;
    let ls = cfg.line_search();
    let tol = cfg.stop_tol();
    let succeeded = |t: &[f64]| success_test(norm_inf(t), cfg.eps_g, cfg.grad_tol_floor);

    let mut x = x0;
    let (mut g, mut truth) = oracle.noisy_grad_with_truth(&x);
    let f0 = problem.value(&x);
    let mut f_cur = f0;
    let mut first_success = succeeded(&truth).then_some(0);
    let mut trace = Vec::new();
    let mut aborted = !all_finite(&g);
    let mut status = Status::MaxIter;

    let initial = initial_stop(norm_inf(&g), norm_inf(&truth), cfg);
    if let (false, Some(s)) = (aborted, initial) {
        status = s;
    } else if !aborted {
        let mut d = neg(&g);
        let mut steepest = true;
        for k in 0..cfg.max_iter {
            let step = backtrack(&mut oracle, &x, &d, &g, &ls);
            let x_new = step.x_trial;
            if !all_finite(&x_new) {
                aborted = true;
                break;
            }
            let (g_new, truth_new) = oracle.noisy_grad_with_truth(&x_new);
            let f_new = problem.value(&x_new);
            if !all_finite(&g_new) {
                aborted = true;
            }
            let mut restarted = false;
            let mut d_new = Vec::new();
            if !aborted {
                engine.update_state(&x, &x_new, &g, &g_new, steepest);
                let proposal = engine.propose(&g_new);
                restarted = !all_finite(&proposal)
                    || restart_check(&g_new, &proposal, cfg.sigma_d, cfg.kappa_d, cfg.p);
                d_new = if restarted {
                    engine.reset_on_restart();
                    neg(&g_new)
                } else {
                    proposal
                };
            }
            trace.push(IterationRecord {
                k,
                alpha: step.alpha,
                j: step.j,
                n_trials: step.n_trials,
                restarted,
                steepest,
                capped_ls: step.capped,
                g_norm_inf: norm_inf(&g),
                g_norm: norm2(&g),
                true_grad_norm_inf: norm_inf(&truth),
                true_grad_norm: norm2(&truth),
                f_true: f_cur,
                f_true_next: f_new,
                g_dot_d: dot(&g, &d),
                d_norm: norm2(&d),
                f_evals_so_far: oracle.n_f_evals(),
                g_evals_so_far: oracle.n_g_evals(),
            });
            x = x_new;
            g = g_new;
            truth = truth_new;
            f_cur = f_new;
            if aborted {
                break;
            }
            if first_success.is_none() && succeeded(&truth) {
                first_success = Some(k + 1);
            }
            if norm_inf(&g) <= tol {
                status = Status::Converged;
                break;
            }
            d = d_new;
            steepest = restarted;
        }
    }

    let iterations = trace.len();
    let fired = trace.iter().filter(|r| r.restarted).count();
    Ok(RunResult {
        problem: problem.name().to_string(),
        dim: problem.dim(),
        method: label.to_string(),
        config: cfg.clone(),
        noise,
        seed,
        status,
        aborted,
        iterations,
        restart_fraction: if iterations == 0 {
            0.0
        } else {
            fired as f64 / iterations as f64
        },
        trace,
        final_true_grad_norm_inf: norm_inf(&truth),
        final_true_grad_norm: norm2(&truth),
        final_x: x,
        solved: first_success.is_some(),
        first_success,
        n_f_evals: oracle.n_f_evals(),
        n_g_evals: oracle.n_g_evals(),
        f0,
        f_final: f_cur,
        lipschitz: problem.lipschitz(),
        f_low: problem.f_low(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testbed::{self, Objective, Problem};

    struct HalfNormSq;
    impl Objective for HalfNormSq {
        fn value(&self, x: &[f64]) -> f64 {
            0.5 * dot(x, x)
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            x.to_vec()
        }
    }

    fn quadratic(n: usize) -> ScaledProblem {
        ScaledProblem {
            base: Problem::new("half", vec![1.0; n], Some(1.0), Some(0.0), HalfNormSq),
            scale: 1.0,
        }
    }

    #[test]
    fn restart_examples() {
        assert!(restart_check(&[1.0, 0.0], &[0.0, 1.0], 1.0, 10.0, 1.0));
        assert!(!restart_check(&[1.0, 0.0], &[-1.0, 0.0], 1e-6, 1e6, 1.0));
        assert!(restart_check(&[0.01, 0.0], &[-1e-4, -100.0], 0.01, 100.0, 1.0));
        // Infinite kappa disables the norm clause; sigma_d = 0 leaves "g'd >= 0".
        assert!(!restart_check(&[1.0], &[-1e12], 0.0, f64::INFINITY, 1.0));
        assert!(restart_check(&[1.0], &[0.0], 0.0, f64::INFINITY, 1.0));
    }

    #[test]
    fn steepest_descent_fires_the_equality_case() {
        let g = [0.3, -0.4];
        assert!(restart_check(&g, &neg(&g), 1.0, 1.0, 1.0));
    }

    #[test]
    fn success_examples() {
        assert!(success_test(1e-8, 0.0, 1e-8));
        assert!(success_test(0.03, 0.01, 1e-8));
        assert!(!success_test(0.0301, 0.01, 1e-8));
    }

    #[test]
    fn gd_halves_the_quadratic() {
        let r = run(&quadratic(4), &SolverConfig::gd(), 0).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(r.iterations <= 30);
        assert!(r.trace.iter().all(|t| t.alpha == 0.5 && t.j == 1));
        assert_eq!(r.final_x, vec![0.5f64.powi(r.iterations as i32); 4]);
        assert_eq!(r.restart_fraction, 1.0);
        assert!(r.solved);
    }

    #[test]
    fn restarted_lbfgs_never_restarts_on_quadratic() {
        let r = run(&quadratic(3), &SolverConfig::lbfgsr(1.0, 1e6), 0).unwrap();
        assert!(r.solved);
        assert!(r.trace.iter().all(|t| !t.restarted), "{:?}", r.trace);
    }

    #[test]
    fn spurious_initial_stop() {
        let mut cfg = SolverConfig::gd();
        cfg.eps_g = 0.01;
        // noisy |g0| = 0.015 <= 0.02 while the true 0.05 > 0.03
        assert_eq!(initial_stop(0.015, 0.05, &cfg), Some(Status::SpuriousInitialStop));
        assert_eq!(initial_stop(0.015, 0.03, &cfg), Some(Status::Converged));
        assert_eq!(initial_stop(0.021, 0.05, &cfg), None);
    }

    #[test]
    fn stop_at_a_stationary_start() {
        let p = ScaledProblem {
            base: Problem::new("half", vec![0.0; 2], Some(1.0), Some(0.0), HalfNormSq),
            scale: 1.0,
        };
        let r = run(&p, &SolverConfig::gd().with_noise(1e-2), 1).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!((r.iterations, r.restart_fraction, r.cost()), (0, 0.0, Some(1)));
    }

    #[test]
    fn counters_and_trace_are_consistent() {
        let p = testbed::scale(&testbed::by_name("rosenbrock2").unwrap()).unwrap();
        for spec in MethodSpec::defaults() {
            let r = run_labeled(&p, &spec.config().with_noise(1e-4), 9, &spec.to_string()).unwrap();
            assert_eq!(r.trace.len(), r.iterations);
            assert_eq!(r.n_g_evals, r.iterations as u64 + 1);
            let total: u64 = r.trace.iter().map(|t| u64::from(t.n_trials) + 1).sum();
            assert_eq!(total, r.n_f_evals);
            for w in r.trace.windows(2) {
                assert!(w[0].f_evals_so_far <= w[1].f_evals_so_far);
                assert!(w[0].g_evals_so_far <= w[1].g_evals_so_far);
                assert_eq!(w[1].steepest, w[0].restarted);
            }
        }
    }

    #[test]
    fn method_labels_round_trip() {
        for s in ["gd", "nlcg", "lbfgs", "nlcgr_p0.75_k1e6", "lbfgsr_p0_k1e2"] {
            let m: MethodSpec = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert_eq!(
            "nlcgr:0.5:1000".parse::<MethodSpec>().unwrap(),
            MethodSpec::Nlcgr { p: 0.5, kappa: 1e3 }
        );
        assert_eq!(
            "lbfgsr".parse::<MethodSpec>().unwrap(),
            MethodSpec::Lbfgsr { p: DEFAULT_P, kappa: DEFAULT_KAPPA }
        );
        assert!("newton".parse::<MethodSpec>().is_err());
        assert!("gd_p1_k1".parse::<MethodSpec>().is_err());
        assert!("nlcgr_p1_k0.5".parse::<MethodSpec>().is_err());
    }

    #[test]
    fn config_serializes_infinite_kappa() {
        let cfg = SolverConfig::nlcg();
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"kappa_d\":\"inf\""));
        let back: SolverConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = SolverConfig::gd();
        cfg.kappa_d = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = SolverConfig::gd();
        cfg.sigma_d = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = SolverConfig::gd();
        cfg.assumption4_sigma_phi = Some(1.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn enforcement_needs_lipschitz() {
        let p = testbed::scale(&testbed::by_name("rosenbrock2").unwrap()).unwrap();
        let mut cfg = SolverConfig::gd();
        cfg.assumption4_sigma_phi = Some(0.5);
        assert!(matches!(run(&p, &cfg, 0), Err(Error::MissingProblemData { .. })));
    }
}
