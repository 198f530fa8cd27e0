use proptest::prelude::*;

use noisyls::bench::{derive_seed, ExperimentPlan};
use noisyls::solver::{run_labeled, MethodSpec, RunResult, Status};
use noisyls::testbed::{self, ScaledProblem};

const SMALL: [&str; 6] = ["quad10", "rosenbrock2", "beale", "wood", "himmelblau", "trigonometric10"];

fn problem(name: &str) -> ScaledProblem {
    testbed::scale(&testbed::by_name(name).unwrap()).unwrap()
}

fn method() -> impl Strategy<Value = MethodSpec> {
    let p = prop::sample::select(vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    let k = prop::sample::select(vec![1e2, 1e3, 1e4, 1e5, 1e6]);
    prop_oneof![
        Just(MethodSpec::Gd),
        Just(MethodSpec::Nlcg),
        Just(MethodSpec::Lbfgs),
        (p.clone(), k.clone()).prop_map(|(p, kappa)| MethodSpec::Nlcgr { p, kappa }),
        (p, k).prop_map(|(p, kappa)| MethodSpec::Lbfgsr { p, kappa }),
    ]
}

fn solve(name: &str, spec: MethodSpec, eps_f: f64, seed: u64) -> RunResult {
    let cfg = spec.config().with_noise(eps_f);
    run_labeled(&problem(name), &cfg, seed, &spec.to_string()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn runs_are_reproducible(
        name in prop::sample::select(SMALL.to_vec()),
        spec in method(),
        eps_f in prop::sample::select(vec![0.0, 1e-8, 1e-4, 1e-2, 1e-1]),
        seed in any::<u64>(),
    ) {
        let a = solve(name, spec, eps_f, seed);
        let b = solve(name, spec, eps_f, seed);
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn restart_forces_steepest_descent(
        name in prop::sample::select(SMALL.to_vec()),
        spec in method(),
        eps_f in prop::sample::select(vec![0.0, 1e-4, 1e-2]),
        seed in 0u64..1000,
    ) {
        let r = solve(name, spec, eps_f, seed);
        let cfg = &r.config;
        prop_assert!(r.trace.first().is_none_or(|t| t.steepest));
        for w in r.trace.windows(2) {
            prop_assert_eq!(w[1].steepest, w[0].restarted);
        }
        for t in &r.trace {
            if t.steepest {
                prop_assert!((t.d_norm - t.g_norm).abs() <= 1e-12 * t.g_norm.max(1.0));
                prop_assert!(t.g_dot_d <= 0.0);
            } else {
                // Every direction that survived the test is a sufficient descent direction.
                let q = (1.0 + cfg.p) / 2.0;
                prop_assert!(t.g_dot_d < -cfg.sigma_d * t.g_norm.powf(1.0 + cfg.p));
                prop_assert!(t.d_norm < cfg.kappa_d * t.g_norm.powf(q));
            }
        }
        let fired = r.trace.iter().filter(|t| t.restarted).count();
        let expect = if r.iterations == 0 { 0.0 } else { fired as f64 / r.iterations as f64 };
        prop_assert_eq!(r.restart_fraction, expect);
    }

    #[test]
    fn noiseless_steps_decrease(
        name in prop::sample::select(SMALL.to_vec()),
        spec in method(),
    ) {
        let r = solve(name, spec, 0.0, 0);
        for t in r.trace.iter().filter(|t| !t.capped_ls) {
            prop_assert!(t.f_true_next < t.f_true + r.config.eta * t.alpha * t.g_dot_d + 1e-15 * t.f_true.abs());
        }
    }

    #[test]
    fn counters_match_the_trace(
        name in prop::sample::select(SMALL.to_vec()),
        spec in method(),
        eps_f in prop::sample::select(vec![0.0, 1e-2]),
        seed in 0u64..1000,
    ) {
        let r = solve(name, spec, eps_f, seed);
        prop_assert_eq!(r.n_g_evals, r.iterations as u64 + 1);
        let f_evals: u64 = r.trace.iter().map(|t| u64::from(t.n_trials) + 1).sum();
        prop_assert_eq!(r.n_f_evals, f_evals);
        if let Some(last) = r.trace.last() {
            prop_assert_eq!(last.f_evals_so_far, r.n_f_evals);
            prop_assert_eq!(last.g_evals_so_far, r.n_g_evals);
        }
        for t in &r.trace {
            prop_assert!(t.j <= r.config.j_max);
            prop_assert_eq!(t.alpha, r.config.theta.powi(t.j as i32));
        }
        prop_assert_eq!(r.cost(), r.first_success.map(|i| i as u64 + 1));
        prop_assert!(r.iterations <= r.config.max_iter);
    }
}

#[test]
fn converged_runs_meet_the_stopping_rule() {
    for name in SMALL {
        for spec in MethodSpec::defaults() {
            let r = solve(name, spec, 1e-4, 5);
            if r.status == Status::Converged && r.iterations > 0 {
                assert!(r.trace.iter().all(|t| t.g_norm_inf > r.config.stop_tol()));
            }
        }
    }
}

#[test]
fn seeds_differ_across_cells() {
    let plan = ExperimentPlan::default();
    let mut seen = std::collections::HashSet::new();
    for p in &plan.problems {
        for m in plan.all_methods() {
            for &e in &plan.noise_levels {
                for rep in 0..plan.replicates {
                    assert!(seen.insert(derive_seed(p, &m.to_string(), e, rep, plan.master_seed)));
                }
            }
        }
    }
}
