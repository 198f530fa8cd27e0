//! Complexity constants for the noisy line-search framework and a verifier
//! that replays a recorded trace against the per-iteration guarantees.
//!
//! Budgets are integer-valued but kept as `f64`: for small step floors they
//! overflow every machine integer long before they stop being meaningful.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linesearch::backtrack_bound;
use crate::solver::RunResult;
use crate::{Error, Result};

/// Step-size floor
/// `2(1-eta) s (1-sf)^(1+p) / (2 k (1+sf)^((1+p)/2) + L k^2 (1+sf)^(1+p))`.
/// Infinite `kappa_d` gives 0.
pub fn alpha_bar_raw(eta: f64, sigma_d: f64, kappa_d: f64, p: f64, sigma_phi: f64, l: f64) -> f64 {
    if kappa_d.is_infinite() {
        return 0.0;
    }
    let num = 2.0 * (1.0 - eta) * sigma_d * (1.0 - sigma_phi).powf(1.0 + p);
    let den = 2.0 * kappa_d * (1.0 + sigma_phi).powf(0.5 * (1.0 + p))
        + l * kappa_d * kappa_d * (1.0 + sigma_phi).powf(1.0 + p);
    num / den
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub eta: f64,
    pub theta: f64,
    pub sigma_d: f64,
    #[serde(with = "crate::serde_ext")]
    pub kappa_d: f64,
    pub p: f64,
    pub sigma_phi: f64,
    pub lipschitz: f64,
    pub eps_1st: f64,
    pub eps_f: f64,
    pub f0: f64,
    pub f_low: f64,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.eta > 0.0 && self.eta <= 0.5) || !(self.theta > 0.0 && self.theta < 1.0) {
            return bad("eta must lie in (0, 1/2] and theta in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.sigma_phi) {
            return bad("sigma_phi must lie in [0, 1)");
        }
        if !(self.lipschitz > 0.0) {
            return bad("L must be > 0");
        }
        if !(self.kappa_d >= 1.0) || !(0.0..=1.0).contains(&self.sigma_d) || !(self.p >= 0.0) {
            return bad("need sigma_d in [0, 1], kappa_d >= 1, p >= 0");
        }
        if !(self.eps_1st >= 0.0) || !(self.eps_f >= 0.0) {
            return bad("noise levels must be >= 0");
        }
        if !(self.f0 >= self.f_low) {
            return bad("f0 must be >= f_low");
        }
        Ok(())
    }

    /// Parameters of a recorded run. Fails when the problem has no known
    /// Lipschitz constant or lower bound.
    pub fn from_run(result: &RunResult) -> Result<Self> {
        let missing = |what| Error::MissingProblemData {
            problem: result.problem.clone(),
            what,
            purpose: "trace verification",
        };
        let cfg = &result.config;
        let params = TheoryParams {
            eta: cfg.eta,
            theta: cfg.theta,
            sigma_d: cfg.sigma_d,
            kappa_d: cfg.kappa_d,
            p: cfg.p,
            sigma_phi: if result.noise.enforce_assumption4 {
                result.noise.sigma_phi
            } else {
                0.0
            },
            lipschitz: result.lipschitz.ok_or_else(|| missing("Lipschitz constant"))?,
            eps_1st: cfg.eps_g,
            eps_f: cfg.eps_f,
            f0: result.f0,
            f_low: result.f_low.ok_or_else(|| missing("lower bound"))?,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Step floor at exponent `use_p`, with the configured `sigma_d` and `kappa_d`.
pub fn alpha_bar(params: &TheoryParams, use_p: f64) -> f64 {
    alpha_bar_raw(
        params.eta,
        params.sigma_d,
        params.kappa_d,
        use_p,
        params.sigma_phi,
        params.lipschitz,
    )
}

/// Step floor of steepest-descent iterations (`sigma_d = kappa_d = p = 1`).
pub fn alpha_bar_1(params: &TheoryParams) -> f64 {
    alpha_bar_raw(params.eta, 1.0, 1.0, 1.0, params.sigma_phi, params.lipschitz)
}

/// `(c_N, c_R)`. `c_N` is `None` when `sigma_phi = 0` and `p > 0`.
pub fn decrease_constants(params: &TheoryParams) -> (Option<f64>, f64) {
    let ab_p = alpha_bar(params, params.p);
    let ab_1 = alpha_bar_1(params);
    let c_r = params.eta * (params.theta * ab_1).min(1.0);
    let c_n = if params.sigma_phi == 0.0 && params.p > 0.0 {
        None
    } else {
        Some(
            params.eta * params.sigma_d * (1.0 - params.sigma_phi).powf(1.0 + params.p)
                / params.sigma_phi.powf(params.p)
                * (params.theta * ab_p).min(1.0),
        )
    };
    (c_n, c_r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Iteration budget; `None` when unbounded.
    pub k_eps: Option<f64>,
    /// Function-evaluation budget; `None` when unbounded.
    pub eval_bound: Option<f64>,
    pub eps: f64,
    pub noise_gate_ok: bool,
}

pub fn iteration_budget(params: &TheoryParams, c_n: Option<f64>, c_r: f64) -> Budget {
    let p = params.p;
    let e1 = params.eps_1st;
    let gap = params.f0 - params.f_low;
    let ab_p = alpha_bar(params, p);
    let ab_1 = alpha_bar_1(params);

    let k_eps = if gap == 0.0 {
        Some(0.0)
    } else {
        match c_n {
            Some(c_n) if c_n > 0.0 && c_r > 0.0 && e1 > 0.0 => {
                let k = 2.0 * gap / c_r * e1.powi(-2) + 2.0 * gap / c_n * e1.powf(-(1.0 + p));
                k.is_finite().then(|| k.ceil())
            }
            _ => None,
        }
    };
    let ab_min = ab_p.min(ab_1);
    let eval_bound = match k_eps {
        Some(k) if ab_min > 0.0 => {
            let per_iter = (ab_min.ln() / params.theta.ln()).max(0.0) + 1.0;
            Some((per_iter * k).ceil())
        }
        Some(0.0) => Some(0.0),
        _ => None,
    };
    let ratio = |ab: f64| {
        if e1 == 0.0 {
            0.0
        } else if params.sigma_phi * ab > 0.0 {
            e1 / (params.sigma_phi * ab)
        } else {
            f64::INFINITY
        }
    };
    let r_p = ratio(ab_p);
    let eps = r_p.max(r_p.powf(2.0 / (1.0 + p))).max(ratio(ab_1));
    let noise_gate_ok = max_noise_level(params, c_n, c_r).is_some_and(|m| params.eps_f <= m);
    Budget {
        k_eps,
        eval_bound,
        eps,
        noise_gate_ok,
    }
}

/// Largest `eps_f` admitted by the budget's noise gate,
/// `min{c_N/8 eps_1st^(1+p), c_R/8 eps_1st^2}`; `None` when `c_N` is undefined.
pub fn max_noise_level(params: &TheoryParams, c_n: Option<f64>, c_r: f64) -> Option<f64> {
    let e1 = params.eps_1st;
    c_n.map(|c_n| (c_n / 8.0 * e1.powf(1.0 + params.p)).min(c_r / 8.0 * e1 * e1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub alpha_bar_p: f64,
    pub alpha_bar_1: f64,
    pub c_n: Option<f64>,
    pub c_r: f64,
    /// Backtrack caps; `None` when the step floor is zero.
    pub j_bar_n: Option<u32>,
    pub j_bar_r: u32,
    pub budget: Budget,
}

pub fn constants(params: &TheoryParams) -> Result<TheoryConstants> {
    params.validate()?;
    let alpha_bar_p = alpha_bar(params, params.p);
    let alpha_bar_1 = alpha_bar_1(params);
    let (c_n, c_r) = decrease_constants(params);
    Ok(TheoryConstants {
        alpha_bar_p,
        alpha_bar_1,
        c_n,
        c_r,
        j_bar_n: backtrack_bound(alpha_bar_p, params.theta).ok(),
        j_bar_r: backtrack_bound(alpha_bar_1, params.theta)?,
        budget: iteration_budget(params, c_n, c_r),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Pass { checked: usize },
    Fail { checked: usize, iterations: Vec<usize> },
    NotApplicable { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub problem: String,
    pub method: String,
    pub seed: u64,
    pub verifiable: bool,
    pub reason: Option<String>,
    pub constants: Option<TheoryConstants>,
    pub checks: Vec<Check>,
    /// First iterate with true gradient norm at most the budget's `eps`.
    pub first_below_eps: Option<usize>,
    /// First iterate with true gradient norm at most `eps_1st`.
    pub first_below_eps_1st: Option<usize>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verifiable && self.violations() == 0
    }

    pub fn violations(&self) -> usize {
        self.checks
            .iter()
            .map(|c| match &c.outcome {
                Outcome::Fail { iterations, .. } => iterations.len().max(1),
                _ => 0,
            })
            .sum()
    }

    pub fn check(&self, name: &str) -> Option<&Outcome> {
        self.checks.iter().find(|c| c.name == name).map(|c| &c.outcome)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} / {} / seed {}", self.problem, self.method, self.seed)?;
        if !self.verifiable {
            return writeln!(f, "  not verifiable: {}", self.reason.as_deref().unwrap_or("?"));
        }
        if let Some(c) = &self.constants {
            writeln!(
                f,
                "  alpha_bar_p={:.6e} alpha_bar_1={:.6e} c_N={} c_R={:.6e}",
                c.alpha_bar_p,
                c.alpha_bar_1,
                c.c_n.map_or("undefined".into(), |v| format!("{v:.6e}")),
                c.c_r
            )?;
            writeln!(
                f,
                "  K_eps={} eval_bound={} eps={:.6e} noise_gate_ok={}",
                c.budget.k_eps.map_or("unbounded".into(), |v| format!("{v}")),
                c.budget.eval_bound.map_or("unbounded".into(), |v| format!("{v}")),
                c.budget.eps,
                c.budget.noise_gate_ok
            )?;
        }
        for check in &self.checks {
            match &check.outcome {
                Outcome::Pass { checked } => writeln!(f, "  PASS {} ({checked} checked)", check.name)?,
                Outcome::Fail { checked, iterations } => {
                    let shown: Vec<String> = iterations.iter().take(10).map(|k| k.to_string()).collect();
                    writeln!(
                        f,
                        "  FAIL {} ({} of {checked}; k = {}{})",
                        check.name,
                        iterations.len(),
                        shown.join(","),
                        if iterations.len() > 10 { ",..." } else { "" }
                    )?
                }
                Outcome::NotApplicable { reason } => writeln!(f, "  n/a  {} ({reason})", check.name)?,
            }
        }
        Ok(())
    }
}

pub const CHECK_BACKTRACK: &str = "backtrack_cap";
pub const CHECK_STEP_FLOOR: &str = "step_floor";
pub const CHECK_DECREASE: &str = "decrease";
pub const CHECK_POINTWISE: &str = "pointwise_decrease";
pub const CHECK_ACCURACY: &str = "gradient_accuracy";
pub const CHECK_ITERATIONS: &str = "iteration_budget";
pub const CHECK_EVALUATIONS: &str = "evaluation_budget";

#[derive(Default)]
struct Tally {
    checked: usize,
    failed: Vec<usize>,
}

impl Tally {
    fn record(&mut self, k: usize, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failed.push(k);
        }
    }

    fn into_check(self, name: &str) -> Check {
        let outcome = if self.failed.is_empty() {
            Outcome::Pass { checked: self.checked }
        } else {
            Outcome::Fail {
                checked: self.checked,
                iterations: self.failed,
            }
        };
        Check {
            name: name.to_string(),
            outcome,
        }
    }
}

/// Whether the true gradient norm is large enough for the guarantees to apply.
/// `shrink` is the gate's left-hand side, `alpha` the matching step floor.
fn gate(shrink: f64, grad_norm: f64, eps_1st: f64, sigma_phi: f64, alpha: f64) -> bool {
    if alpha <= 0.0 {
        return false;
    }
    if eps_1st == 0.0 {
        return grad_norm > 0.0;
    }
    sigma_phi * alpha > 0.0 && shrink >= eps_1st / (sigma_phi * alpha)
}

/// Verify a run using the constants of its own configuration.
pub fn verify_run(result: &RunResult) -> VerificationReport {
    match TheoryParams::from_run(result) {
        Ok(params) => verify_trace(result, &params),
        Err(e) => VerificationReport {
            problem: result.problem.clone(),
            method: result.method.clone(),
            seed: result.seed,
            verifiable: false,
            reason: Some(e.to_string()),
            constants: None,
            checks: Vec::new(),
            first_below_eps: None,
            first_below_eps_1st: None,
        },
    }
}

/// Replay a trace: on gated iterations, check the backtrack cap, the step
/// floor, the decrease guarantees and gradient accuracy; when the noise gate
/// holds, check the iteration and evaluation budgets.
pub fn verify_trace(result: &RunResult, params: &TheoryParams) -> VerificationReport {
    let mut report = VerificationReport {
        problem: result.problem.clone(),
        method: result.method.clone(),
        seed: result.seed,
        verifiable: true,
        reason: None,
        constants: None,
        checks: Vec::new(),
        first_below_eps: None,
        first_below_eps_1st: None,
    };
    let c = match constants(params) {
        Ok(c) => c,
        Err(e) => {
            report.verifiable = false;
            report.reason = Some(e.to_string());
            return report;
        }
    };
    let p = params.p;
    let (sf, e1, ef) = (params.sigma_phi, params.eps_1st, params.eps_f);
    let mut cap = Tally::default();
    let mut floor = Tally::default();
    let mut decrease = Tally::default();
    let mut pointwise = Tally::default();
    let mut accuracy = Tally::default();

    for r in &result.trace {
        let gn = r.true_grad_norm;
        let shrink = gn.min(gn.powf(0.5 * (1.0 + p)));
        let roundoff = 8.0 * f64::EPSILON * (r.f_true.abs() + r.f_true_next.abs());
        let drop = r.f_true - r.f_true_next;

        if gate(shrink, gn, e1, sf, c.alpha_bar_p) {
            let bad_low = r.g_norm < (1.0 - sf) * gn * (1.0 - 1e-12);
            let bad_high = r.g_norm > (1.0 + sf) * gn * (1.0 + 1e-12);
            accuracy.record(r.k, !(bad_low || bad_high));
        }

        // (step floor, backtrack cap, decrease constant, sigma, exponent)
        let bound = if r.steepest {
            gate(gn, gn, e1, sf, c.alpha_bar_1).then_some((c.alpha_bar_1, c.j_bar_r, Some(c.c_r), 1.0, 2.0))
        } else {
            c.j_bar_n
                .filter(|_| gate(shrink, gn, e1, sf, c.alpha_bar_p))
                .map(|j| (c.alpha_bar_p, j, c.c_n, params.sigma_d, 1.0 + p))
        };
        let Some((ab, j_bar, c_dec, sigma, expo)) = bound else {
            continue;
        };
        cap.record(r.k, r.j <= j_bar);
        if r.j >= 1 {
            floor.record(r.k, r.alpha >= params.theta * ab);
        }
        let guaranteed = match (e1 == 0.0, c_dec) {
            (true, _) => 0.0,
            (false, Some(cd)) => cd * e1.powf(expo),
            (false, None) => f64::NAN,
        };
        if !guaranteed.is_nan() {
            decrease.record(r.k, drop + roundoff > guaranteed - 4.0 * ef);
        }
        let step = (params.theta * ab).min(1.0);
        let local = params.eta * step * sigma * ((1.0 - sf) * gn).powf(expo) - 4.0 * ef;
        pointwise.record(r.k, drop + roundoff > local);
    }

    report.checks.push(cap.into_check(CHECK_BACKTRACK));
    report.checks.push(floor.into_check(CHECK_STEP_FLOOR));
    report.checks.push(decrease.into_check(CHECK_DECREASE));
    report.checks.push(pointwise.into_check(CHECK_POINTWISE));
    report.checks.push(accuracy.into_check(CHECK_ACCURACY));

    // Iterate i has true gradient norm trace[i].true_grad_norm, or the final norm for i = iterations.
    let norms: Vec<f64> = result
        .trace
        .iter()
        .map(|r| r.true_grad_norm)
        .chain(std::iter::once(result.final_true_grad_norm))
        .collect();
    report.first_below_eps = norms.iter().position(|&n| n <= c.budget.eps);
    report.first_below_eps_1st = norms.iter().position(|&n| n <= e1);

    let na = |reason: &str| Outcome::NotApplicable { reason: reason.to_string() };
    let (iter_outcome, eval_outcome) = match (c.budget.noise_gate_ok, c.budget.k_eps) {
        (false, _) => (na("noise gate does not hold"), na("noise gate does not hold")),
        (true, None) => (na("budget unbounded"), na("budget unbounded")),
        (true, Some(k_eps)) => match report.first_below_eps {
            Some(i) => {
                let evals = if i == 0 { 0 } else { result.trace[i - 1].f_evals_so_far };
                let iter_ok = (i as f64) <= k_eps;
                let eval_ok = c.budget.eval_bound.is_some_and(|b| (evals as f64) <= b);
                let pick = |ok: bool| {
                    if ok {
                        Outcome::Pass { checked: 1 }
                    } else {
                        Outcome::Fail {
                            checked: 1,
                            iterations: vec![i],
                        }
                    }
                };
                (pick(iter_ok), pick(eval_ok))
            }
            None if (result.iterations as f64) >= k_eps => {
                let fail = Outcome::Fail {
                    checked: 1,
                    iterations: vec![result.iterations],
                };
                (fail.clone(), fail)
            }
            None => (
                na("run stopped before reaching eps"),
                na("run stopped before reaching eps"),
            ),
        },
    };
    report.checks.push(Check {
        name: CHECK_ITERATIONS.into(),
        outcome: iter_outcome,
    });
    report.checks.push(Check {
        name: CHECK_EVALUATIONS.into(),
        outcome: eval_outcome,
    });
    report.constants = Some(c);
    report
}
