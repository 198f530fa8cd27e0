//! Experiment sweeps over problems, methods, noise levels and replicates.
//!
//! Runs execute on a rayon pool; results are collected in plan order so every
//! artifact is independent of the worker count.

mod emit;
mod matrix;
mod profiles;
mod svg;
mod tables;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::solver::{run_labeled, MethodSpec, RunResult, Status};
use crate::testbed;
use crate::{Error, Result};

pub use emit::{
    default_sets, emit, noise_label, profile_sets, read_summaries, restart_tables, Artifacts, ProfileSet,
    RESTARTED_FAMILIES,
};
pub use matrix::{median, Aggregated, CostMatrix, CostRow, DiscardStat};
pub use profiles::{data_profile, performance_profile, uniquely_fastest, ProfileCurve};
pub use svg::profile_svg;
pub use tables::{restart_table, RestartCell, RestartTable};

pub const DEFAULT_NOISE: [f64; 5] = [0.0, 1e-8, 1e-4, 1e-2, 1e-1];
pub const DEFAULT_P_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_KAPPA_GRID: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub problems: Vec<String>,
    pub methods: Vec<MethodSpec>,
    /// `eps_f` values; each run uses `eps_g = sqrt(eps_f)`.
    pub noise_levels: Vec<f64>,
    pub replicates: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub p_grid: Vec<f64>,
    #[serde(default)]
    pub kappa_grid: Vec<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses rayon's default.
    #[serde(default, skip_serializing)]
    pub workers: usize,
}

fn default_max_iter() -> usize {
    1000
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            problems: testbed::names(),
            methods: MethodSpec::defaults(),
            noise_levels: DEFAULT_NOISE.to_vec(),
            replicates: 3,
            master_seed: 0,
            p_grid: DEFAULT_P_GRID.to_vec(),
            kappa_grid: DEFAULT_KAPPA_GRID.to_vec(),
            max_iter: default_max_iter(),
            output_dir: None,
            workers: 0,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.replicates == 0 {
            return bad("replicates must be >= 1");
        }
        if self.problems.is_empty() || self.methods.is_empty() || self.noise_levels.is_empty() {
            return bad("plan needs at least one problem, method and noise level");
        }
        if self.noise_levels.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return bad("noise levels must be finite and >= 0");
        }
        if self.p_grid.iter().any(|p| !(*p >= 0.0)) || self.kappa_grid.iter().any(|k| !(*k >= 1.0)) {
            return bad("grid needs p >= 0 and kappa >= 1");
        }
        testbed::select(&self.problems)?;
        for m in self.all_methods() {
            m.config().validate()?;
        }
        Ok(())
    }

    /// The listed methods followed by every restarted grid variant not already listed.
    pub fn all_methods(&self) -> Vec<MethodSpec> {
        let mut out = self.methods.clone();
        for &p in &self.p_grid {
            for &kappa in &self.kappa_grid {
                for m in [MethodSpec::Nlcgr { p, kappa }, MethodSpec::Lbfgsr { p, kappa }] {
                    if !out.contains(&m) {
                        out.push(m);
                    }
                }
            }
        }
        out
    }

    pub fn n_runs(&self) -> usize {
        self.problems.len() * self.all_methods().len() * self.noise_levels.len() * self.replicates
    }
}

/// Seed of one run: the first 8 bytes of a SHA-256 over the run key.
pub fn derive_seed(problem: &str, method: &str, eps_f: f64, replicate: usize, master_seed: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(problem.as_bytes());
    h.update([0]);
    h.update(method.as_bytes());
    h.update([0]);
    h.update(eps_f.to_bits().to_le_bytes());
    h.update((replicate as u64).to_le_bytes());
    h.update(master_seed.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// One line per run, without the trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub dim: usize,
    pub method: String,
    pub noise: f64,
    pub replicate: usize,
    pub seed: u64,
    pub status: Status,
    pub aborted: bool,
    pub solved: bool,
    pub cost: Option<u64>,
    pub iterations: usize,
    pub restarts: usize,
    pub restart_fraction: f64,
    pub n_f_evals: u64,
    pub n_g_evals: u64,
    pub f_final: f64,
    pub final_grad_inf: f64,
}

impl RunSummary {
    pub fn from_result(r: &RunResult, noise: f64, replicate: usize) -> Self {
        RunSummary {
            problem: r.problem.clone(),
            dim: r.dim,
            method: r.method.clone(),
            noise,
            replicate,
            seed: r.seed,
            status: r.status,
            aborted: r.aborted,
            solved: r.solved,
            cost: r.cost(),
            iterations: r.iterations,
            restarts: r.trace.iter().filter(|t| t.restarted).count(),
            restart_fraction: r.restart_fraction,
            n_f_evals: r.n_f_evals,
            n_g_evals: r.n_g_evals,
            f_final: r.f_final,
            final_grad_inf: r.final_true_grad_norm_inf,
        }
    }

    pub fn discarded(&self) -> bool {
        self.status == Status::SpuriousInitialStop
    }
}

/// Execute every run of the plan. Names are checked before any run starts.
pub fn run_plan(plan: &ExperimentPlan) -> Result<Vec<RunSummary>> {
    plan.validate()?;
    let problems = testbed::select(&plan.problems)?
        .iter()
        .map(testbed::scale)
        .collect::<Result<Vec<_>>>()?;
    let methods = plan.all_methods();
    let mut jobs = Vec::with_capacity(plan.n_runs());
    for (pi, _) in problems.iter().enumerate() {
        for (mi, _) in methods.iter().enumerate() {
            for &eps_f in &plan.noise_levels {
                for rep in 0..plan.replicates {
                    jobs.push((pi, mi, eps_f, rep));
                }
            }
        }
    }
    let labels: Vec<String> = methods.iter().map(|m| m.to_string()).collect();
    let work = |&(pi, mi, eps_f, rep): &(usize, usize, f64, usize)| -> Result<RunSummary> {
        let problem = &problems[pi];
        let label = &labels[mi];
        let mut cfg = methods[mi].config().with_noise(eps_f);
        cfg.max_iter = plan.max_iter;
        let seed = derive_seed(problem.name(), label, eps_f, rep, plan.master_seed);
        let result = run_labeled(problem, &cfg, seed, label)?;
        Ok(RunSummary::from_result(&result, eps_f, rep))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(work).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentPlan {
        ExperimentPlan {
            problems: vec!["quad10".into()],
            methods: vec![MethodSpec::Gd],
            noise_levels: vec![0.0],
            replicates: 1,
            p_grid: vec![],
            kappa_grid: vec![],
            ..ExperimentPlan::default()
        }
    }

    #[test]
    fn degenerate_plan_runs_once() {
        let runs = run_plan(&tiny()).unwrap();
        assert_eq!(runs.len(), 1);
        assert!(!runs[0].discarded());
        assert!(runs[0].solved);
    }

    #[test]
    fn unknown_names_fail_before_running() {
        let plan = ExperimentPlan {
            problems: vec!["quad10".into(), "nope".into()],
            ..tiny()
        };
        assert!(matches!(run_plan(&plan), Err(Error::UnknownProblem(_))));
        let plan = ExperimentPlan { replicates: 0, ..tiny() };
        assert!(run_plan(&plan).is_err());
    }

    #[test]
    fn grid_expansion_dedups() {
        let plan = ExperimentPlan::default();
        let all = plan.all_methods();
        assert_eq!(all.len(), 5 + 2 * 25 - 2);
        assert_eq!(plan.n_runs(), 26 * 53 * 5 * 3);
    }

    #[test]
    fn seeds_depend_on_every_key_part() {
        let base = derive_seed("a", "gd", 0.0, 0, 1);
        assert_eq!(base, derive_seed("a", "gd", 0.0, 0, 1));
        assert_ne!(base, derive_seed("b", "gd", 0.0, 0, 1));
        assert_ne!(base, derive_seed("a", "nlcg", 0.0, 0, 1));
        assert_ne!(base, derive_seed("a", "gd", 1e-8, 0, 1));
        assert_ne!(base, derive_seed("a", "gd", 0.0, 1, 1));
        assert_ne!(base, derive_seed("a", "gd", 0.0, 0, 2));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let plan = ExperimentPlan {
            problems: vec!["rosenbrock2".into(), "beale".into()],
            methods: MethodSpec::defaults(),
            noise_levels: vec![0.0, 1e-2],
            replicates: 2,
            p_grid: vec![],
            kappa_grid: vec![],
            ..ExperimentPlan::default()
        };
        let one = run_plan(&ExperimentPlan { workers: 1, ..plan.clone() }).unwrap();
        let three = run_plan(&ExperimentPlan { workers: 3, ..plan }).unwrap();
        assert_eq!(one, three);
    }
}
