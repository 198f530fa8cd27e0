//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::VecDeque;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use noisyls::bench::{
    data_profile, emit, performance_profile, restart_table, run_plan, Aggregated, Artifacts,
    ExperimentPlan, RESTARTED_FAMILIES,
};
use noisyls::directions::{cautious_accept, two_loop, BetaRule};
use noisyls::solver::{run, run_labeled, MethodSpec, SolverConfig};
use noisyls::testbed::{self, Problem, ScaledProblem};
use noisyls::theory::{self, Outcome, TheoryParams};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn known_l() -> Vec<ScaledProblem> {
    testbed::registry()
        .iter()
        .filter(|p| p.lipschitz.is_some() && p.f_low.is_some())
        .map(|p| testbed::scale(p).unwrap())
        .collect()
}

// 1 ---------------------------------------------------------------------------

fn central_difference(p: &Problem, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * x[i].abs().max(1.0);
            xp[i] = x[i] + h;
            let up = p.value(&xp);
            xp[i] = x[i] - h;
            let down = p.value(&xp);
            xp[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn gradient_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = (0.0f64, String::new());
    let mut points = 0;
    for p in testbed::registry() {
        let mut xs = vec![p.x0.clone()];
        for _ in 0..5 {
            xs.push(p.x0.iter().map(|v| v + rng.random_range(-0.5..0.5)).collect());
        }
        for x in &xs {
            let g = p.gradient(x);
            let fd = central_difference(&p, x);
            let num = g.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let den = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let err = num / den;
            if err > worst.0 {
                worst = (err, p.name.clone());
            }
            points += 1;
        }
    }
    ensure(worst.0 <= 1e-6, || format!("{}: relative error {:.3e}", worst.1, worst.0))?;
    Ok(format!("{points} points, worst relative error {:.2e} ({})", worst.0, worst.1))
}

// 2 ---------------------------------------------------------------------------

fn base_params() -> TheoryParams {
    TheoryParams {
        eta: 0.5,
        theta: 0.5,
        sigma_d: 1.0,
        kappa_d: 1.0,
        p: 1.0,
        sigma_phi: 0.0,
        lipschitz: 1.0,
        eps_1st: 0.0,
        eps_f: 0.0,
        f0: 1.0,
        f_low: 0.0,
    }
}

fn constants_oracle() -> Check {
    let tol = 1e-12;
    let a = theory::alpha_bar(&base_params(), 1.0);
    ensure(rel(a, 1.0 / 3.0) <= tol, || format!("alpha_bar = {a}, want 1/3"))?;

    let half = TheoryParams { sigma_phi: 0.5, ..base_params() };
    // 2 * 0.5 * 1 * 0.5^2 / (2 * 1.5 + 1 * 1.5^2)
    let want_ab = (2.0 * 0.5 * 0.25) / (2.0 * 1.5 + 2.25);
    let ab = theory::alpha_bar(&half, 1.0);
    ensure(rel(ab, want_ab) <= tol, || format!("alpha_bar(sigma_phi=0.5) = {ab}, want {want_ab}"))?;
    ensure(rel(ab, 0.047619) <= 1e-5, || format!("alpha_bar(sigma_phi=0.5) = {ab}"))?;
    let ab1 = theory::alpha_bar_1(&half);
    ensure(rel(ab1, want_ab) <= tol, || format!("alpha_bar_1 = {ab1}"))?;

    let (c_n, c_r) = theory::decrease_constants(&half);
    let c_n = c_n.ok_or("c_N undefined at sigma_phi = 0.5")?;
    let want_cn = 0.5 * 1.0 * (0.25 / 0.5) * (0.5 * want_ab).min(1.0);
    let want_cr = 0.5 * (0.5 * want_ab).min(1.0);
    ensure(rel(c_n, want_cn) <= tol, || format!("c_N = {c_n}, want {want_cn}"))?;
    ensure(rel(c_r, want_cr) <= tol, || format!("c_R = {c_r}, want {want_cr}"))?;
    ensure(rel(c_n, 0.0059524) <= 1e-4 && rel(c_r, 0.0119048) <= 1e-5, || {
        format!("c_N = {c_n}, c_R = {c_r} far from 0.0059524 / 0.0119048")
    })?;

    let budget_params = TheoryParams { eps_1st: 0.1, ..base_params() };
    let b = theory::iteration_budget(&budget_params, Some(0.01), 0.01);
    ensure(b.k_eps == Some(40000.0), || format!("K_eps = {:?}, want 40000", b.k_eps))?;
    let per_iter = ((1.0f64 / 3.0).ln() / 0.5f64.ln()).max(0.0) + 1.0;
    let want_evals = (per_iter * 40000.0).ceil();
    ensure(b.eval_bound == Some(want_evals), || {
        format!("eval_bound = {:?}, want {want_evals}", b.eval_bound)
    })?;
    let zero_gap = TheoryParams { f0: 0.0, ..budget_params };
    ensure(theory::iteration_budget(&zero_gap, Some(0.01), 0.01).k_eps == Some(0.0), || {
        "K_eps with zero gap".into()
    })?;
    Ok(format!(
        "alpha_bar {ab:.6}, c_N {c_n:.7}, c_R {c_r:.7}, K_eps 40000, eval bound {want_evals}"
    ))
}

// 3 ---------------------------------------------------------------------------

fn backtrack_cap() -> Check {
    let mut gated = 0;
    let mut runs = 0;
    for problem in known_l() {
        for spec in MethodSpec::defaults() {
            let r = run_labeled(&problem, &spec.config(), 1, &spec.to_string()).map_err(|e| e.to_string())?;
            let report = theory::verify_run(&r);
            ensure(report.verifiable, || format!("{} {} not verifiable", r.problem, r.method))?;
            match report.check(theory::CHECK_BACKTRACK) {
                Some(Outcome::Pass { checked }) => gated += checked,
                other => return Err(format!("{} / {}: {other:?}", r.problem, r.method)),
            }
            runs += 1;
        }
    }
    ensure(gated > 0, || "no gated iterations".into())?;
    Ok(format!("{runs} noiseless runs, {gated} gated iterations, 0 violations"))
}

// 4 ---------------------------------------------------------------------------

const SIGMA_PHI: f64 = 0.5;

/// Proportional gradient noise with `eps_f` set to the largest value the noise gate admits.
fn enforced(problem: &ScaledProblem, spec: MethodSpec, eps_1st: f64) -> SolverConfig {
    let mut cfg = spec.config();
    cfg.assumption4_sigma_phi = Some(SIGMA_PHI);
    cfg.eps_g = eps_1st;
    let params = TheoryParams {
        eta: cfg.eta,
        theta: cfg.theta,
        sigma_d: cfg.sigma_d,
        kappa_d: cfg.kappa_d,
        p: cfg.p,
        sigma_phi: SIGMA_PHI,
        lipschitz: problem.lipschitz().unwrap(),
        eps_1st,
        eps_f: 0.0,
        f0: problem.value(problem.x0()),
        f_low: problem.f_low().unwrap(),
    };
    let (c_n, c_r) = theory::decrease_constants(&params);
    cfg.eps_f = theory::max_noise_level(&params, c_n, c_r).unwrap();
    cfg
}

fn enforced_methods() -> Vec<MethodSpec> {
    vec![
        MethodSpec::Gd,
        MethodSpec::Nlcgr { p: 0.75, kappa: 1e2 },
        MethodSpec::Lbfgsr { p: 0.75, kappa: 1e2 },
    ]
}

fn decrease_guarantees() -> Check {
    let problems = known_l();
    ensure(problems.len() >= 5, || format!("only {} problems with known L", problems.len()))?;
    let mut gated = 0;
    let mut runs = 0;
    for problem in &problems {
        for spec in enforced_methods() {
            for eps_1st in [1e-3, 1e-2] {
                let cfg = enforced(problem, spec, eps_1st);
                for seed in 0..3 {
                    let r = run_labeled(problem, &cfg, seed, &spec.to_string()).map_err(|e| e.to_string())?;
                    let report = theory::verify_run(&r);
                    let budget = &report.constants.as_ref().ok_or("no constants")?.budget;
                    ensure(budget.noise_gate_ok, || format!("{} {}: gate fails", r.problem, r.method))?;
                    for name in [theory::CHECK_DECREASE, theory::CHECK_POINTWISE, theory::CHECK_BACKTRACK] {
                        match report.check(name) {
                            Some(Outcome::Pass { checked }) => {
                                if name == theory::CHECK_DECREASE {
                                    gated += checked;
                                }
                            }
                            other => {
                                return Err(format!(
                                    "{} / {} / eps_1st {eps_1st:e} / seed {seed}: {name} {other:?}",
                                    r.problem, r.method
                                ))
                            }
                        }
                    }
                    runs += 1;
                }
            }
        }
    }
    ensure(gated > 0, || "no gated iterations".into())?;
    Ok(format!(
        "{runs} runs on {} problems, {gated} gated iterations, 0 violations",
        problems.len()
    ))
}

// 5 ---------------------------------------------------------------------------

fn budget_bounds() -> Check {
    let problem = testbed::scale(&testbed::by_name("quad10").map_err(|e| e.to_string())?).unwrap();
    let target_eps = 0.05;
    let mut lines = Vec::new();
    for spec in enforced_methods() {
        // Pick eps_1st so that the budget's eps equals target_eps.
        let probe = enforced(&problem, spec, 1.0);
        let params = TheoryParams {
            eta: probe.eta,
            theta: probe.theta,
            sigma_d: probe.sigma_d,
            kappa_d: probe.kappa_d,
            p: probe.p,
            sigma_phi: SIGMA_PHI,
            lipschitz: problem.lipschitz().unwrap(),
            eps_1st: 0.0,
            eps_f: 0.0,
            f0: 0.0,
            f_low: 0.0,
        };
        let ab = theory::alpha_bar(&params, params.p).min(theory::alpha_bar_1(&params));
        let eps_1st = target_eps * SIGMA_PHI * ab;
        let cfg = enforced(&problem, spec, eps_1st);
        for seed in 0..3 {
            let r = run_labeled(&problem, &cfg, seed, &spec.to_string()).map_err(|e| e.to_string())?;
            let report = theory::verify_run(&r);
            let c = report.constants.as_ref().ok_or("no constants")?;
            ensure(c.budget.noise_gate_ok, || format!("{}: gate fails", r.method))?;
            ensure(rel(c.budget.eps, target_eps) <= 1e-9, || format!("eps = {}", c.budget.eps))?;
            let first = report.first_below_eps.ok_or_else(|| format!("{}: never reached eps", r.method))?;
            ensure(first > 0, || "already stationary at x0".into())?;
            for name in [theory::CHECK_ITERATIONS, theory::CHECK_EVALUATIONS] {
                ensure(matches!(report.check(name), Some(Outcome::Pass { .. })), || {
                    format!("{} seed {seed}: {name} {:?}", r.method, report.check(name))
                })?;
            }
            if seed == 0 {
                lines.push(format!(
                    "{} reached eps at k={first} (K_eps {:.3e})",
                    spec.family(),
                    c.budget.k_eps.unwrap_or(f64::INFINITY)
                ));
            }
        }
    }
    Ok(lines.join("; "))
}

// 6 ---------------------------------------------------------------------------

fn dense_bfgs_direction(pairs: &[(Vec<f64>, Vec<f64>)], g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gamma = pairs.last().map_or(1.0, |(s, y)| dot(s, y) / dot(y, y));
    let mut h: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { gamma } else { 0.0 }).collect())
        .collect();
    for (s, y) in pairs {
        let rho = 1.0 / dot(s, y);
        // H <- (I - rho s y') H (I - rho y s') + rho s s'
        let left: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| (f64::from(i == k) - rho * s[i] * y[k]) * h[k][j]).sum())
                    .collect()
            })
            .collect();
        h = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let prod: f64 = (0..n).map(|k| left[i][k] * (f64::from(k == j) - rho * y[k] * s[j])).sum();
                        prod + rho * s[i] * s[j]
                    })
                    .collect()
            })
            .collect();
    }
    (0..n).map(|i| -dot(&h[i], g)).collect()
}

fn reductions() -> Check {
    let mut compared = 0;
    for name in ["rosenbrock2", "trigonometric10", "broyden_tridiag100"] {
        let problem = testbed::scale(&testbed::by_name(name).unwrap()).unwrap();
        for seed in [3, 17] {
            let gd = run(&problem, &SolverConfig::gd().with_noise(1e-4), seed).map_err(|e| e.to_string())?;
            let cg_cfg = SolverConfig::nlcg().with_noise(1e-4).with_beta_rule(BetaRule::Zero);
            let cg = run(&problem, &cg_cfg, seed).map_err(|e| e.to_string())?;
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            ensure(bits(&gd.final_x) == bits(&cg.final_x), || format!("{name}: final iterates differ"))?;
            ensure(gd.iterations == cg.iterations, || format!("{name}: iteration counts differ"))?;
            for (a, b) in gd.trace.iter().zip(&cg.trace) {
                let same = a.alpha.to_bits() == b.alpha.to_bits()
                    && a.j == b.j
                    && a.f_true.to_bits() == b.f_true.to_bits()
                    && a.g_norm.to_bits() == b.g_norm.to_bits();
                ensure(same, || format!("{name}: iteration {} differs", a.k))?;
            }
            compared += gd.iterations;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n = 1 + case % 5;
        let m = case % 4;
        let mut pairs = Vec::new();
        while pairs.len() < m {
            let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            if cautious_accept(&s, &y, 1e-2) {
                pairs.push((s, y));
            }
        }
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = two_loop(&pairs.iter().cloned().collect::<VecDeque<_>>(), &g);
        let slow = dense_bfgs_direction(&pairs, &g);
        let scale = slow.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (a, b) in fast.iter().zip(&slow) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    ensure(worst <= 1e-12, || format!("two-loop vs dense: {worst:.3e}"))?;
    Ok(format!(
        "beta=0 CG bit-identical to GD over {compared} iterations; two-loop max deviation {worst:.1e} over 100 cases"
    ))
}

// 7 ---------------------------------------------------------------------------

fn restart_direction() -> Check {
    let (hi, lo) = ((0.0, 1e2), (0.75, 1e6));
    let plan = ExperimentPlan {
        methods: vec![
            MethodSpec::Nlcgr { p: hi.0, kappa: hi.1 },
            MethodSpec::Nlcgr { p: lo.0, kappa: lo.1 },
            MethodSpec::Lbfgsr { p: hi.0, kappa: hi.1 },
            MethodSpec::Lbfgsr { p: lo.0, kappa: lo.1 },
        ],
        noise_levels: vec![0.0],
        replicates: 1,
        p_grid: vec![hi.0, lo.0],
        kappa_grid: vec![hi.1, lo.1],
        ..ExperimentPlan::default()
    };
    let runs = run_plan(&plan).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for fam in RESTARTED_FAMILIES {
        let t = restart_table(&runs, fam, 0.0, &plan.p_grid, &plan.kappa_grid);
        let pct = |(p, k): (f64, f64)| t.cell(p, k).and_then(|c| c.mean_percent);
        let (a, b) = (pct(lo).ok_or("missing cell")?, pct(hi).ok_or("missing cell")?);
        ensure(a < b, || format!("{fam}: {a:.2}% is not below {b:.2}%"))?;
        parts.push(format!("{fam} {a:.2}% < {b:.2}%"));
    }
    Ok(format!("{} problems: {}", plan.problems.len(), parts.join(", ")))
}

// 8 ---------------------------------------------------------------------------

fn profile_oracle() -> Check {
    const INF: f64 = f64::INFINITY;
    let costs = vec![vec![2.0, 4.0], vec![4.0, 4.0], vec![INF, 8.0]];
    let dims = [1, 3, 1];
    let agg = Aggregated::from_costs(&["A", "B"], &dims, costs.clone());
    let perf = performance_profile(&agg);
    let got = [perf[0].value_at(1.0), perf[1].value_at(1.0), perf[1].value_at(2.0)];
    ensure(got == [2.0 / 3.0, 2.0 / 3.0, 1.0], || format!("rho values {got:?}"))?;
    ensure(perf[0].value_at(1e12) == 2.0 / 3.0, || "rho_A must stay at 2/3".into())?;

    let data = data_profile(&agg);
    let mut grid: Vec<f64> = (0..=64).map(|i| f64::from(i) / 8.0).collect();
    grid.extend([0.3, 1.3, 2.7, 5.5, 1e6]);
    for &alpha in &grid {
        for (mi, curve) in data.iter().enumerate() {
            let hits = costs
                .iter()
                .zip(&dims)
                .filter(|(row, &n)| row[mi] <= alpha * (n as f64 + 1.0))
                .count();
            let want = hits as f64 / costs.len() as f64;
            ensure(curve.value_at(alpha) == want, || {
                format!("d_{}({alpha}) = {} but brute force gives {want}", curve.method, curve.value_at(alpha))
            })?;
        }
    }
    Ok(format!("rho_A(1)=2/3, rho_B(1)=2/3, rho_B(2)=1; data profile matches brute force at {} points", grid.len()))
}

// 9 ---------------------------------------------------------------------------

fn determinism() -> Check {
    let plan = ExperimentPlan {
        problems: ["quad10", "rosenbrock2", "beale", "wood", "himmelblau", "logcosh50"]
            .map(String::from)
            .to_vec(),
        noise_levels: vec![0.0, 1e-4, 1e-1],
        replicates: 2,
        master_seed: 42,
        p_grid: vec![0.0, 0.75],
        kappa_grid: vec![1e2, 1e6],
        ..ExperimentPlan::default()
    };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut listings = Vec::new();
    for (dir, workers) in dirs.iter().zip([1, 3]) {
        let plan = ExperimentPlan { workers, ..plan.clone() };
        let runs = run_plan(&plan).map_err(|e| e.to_string())?;
        let files = emit(&Artifacts::build(&plan, runs), dir.path()).map_err(|e| e.to_string())?;
        listings.push(files.iter().map(|f| f.file_name().unwrap().to_owned()).collect::<Vec<_>>());
    }
    ensure(listings[0] == listings[1], || "different file sets".into())?;
    let mut csvs = 0;
    for name in &listings[0] {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        ensure(a == b, || format!("{} differs", name.to_string_lossy()))?;
        csvs += usize::from(name.to_string_lossy().ends_with(".csv"));
    }
    Ok(format!(
        "{} files ({csvs} CSV) byte-identical across 1 and 3 workers",
        listings[0].len()
    ))
}

// 10 --------------------------------------------------------------------------

fn desk_sweep() -> Check {
    let plan = ExperimentPlan {
        master_seed: 7,
        ..ExperimentPlan::default()
    };
    ensure(plan.problems.len() >= 20, || "fewer than 20 problems".into())?;
    let runs = run_plan(&plan).map_err(|e| e.to_string())?;
    let art = Artifacts::build(&plan, runs);
    let dir = tempfile::tempdir().unwrap();
    let files = emit(&art, dir.path()).map_err(|e| e.to_string())?;
    let names: Vec<String> = files
        .iter()
        .map(|f| f.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    let count = |prefix: &str, suffix: &str| names.iter().filter(|n| n.starts_with(prefix) && n.ends_with(suffix)).count();
    let levels = plan.noise_levels.len();
    ensure(count("restarts_", ".csv") == 2 * levels + 1, || "restart tables missing".into())?;
    ensure(count("perf_", ".svg") == 3 * levels && count("data_", ".svg") == 3 * levels, || {
        "profiles missing".into()
    })?;
    ensure(names.iter().any(|n| n == "discards.csv"), || "discard stats missing".into())?;
    let noiseless = art.discards.iter().find(|d| d.noise == 0.0).ok_or("no noiseless level")?;
    ensure(noiseless.percent == 0.0, || format!("noiseless discards {}%", noiseless.percent))?;
    let pct: Vec<String> = art.discards.iter().map(|d| format!("{:e}:{:.1}%", d.noise, d.percent)).collect();
    Ok(format!(
        "{} runs ({} problems x {} methods x {levels} levels x {} reps), {} files, discards {}",
        art.runs.len(),
        plan.problems.len(),
        plan.all_methods().len(),
        plan.replicates,
        files.len(),
        pct.join(" ")
    ))
}

fn main() {
    type Criterion = (&'static str, u64, fn() -> Check);
    let criteria: [Criterion; 10] = [
        ("gradient correctness", 10, gradient_correctness),
        ("constants oracle", 1, constants_oracle),
        ("backtrack cap on noiseless runs", 60, backtrack_cap),
        ("decrease guarantees under enforced noise", 120, decrease_guarantees),
        ("iteration and evaluation budgets", 60, budget_bounds),
        ("reduction equivalences", 10, reductions),
        ("restart-table direction", 300, restart_direction),
        ("profile oracle", 1, profile_oracle),
        ("bench determinism", 600, determinism),
        ("end-to-end desk sweep", 600, desk_sweep),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str()) || *p == n.to_string()) {
            continue;
        }
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed <= Duration::from_secs(*budget) {
                Ok(detail)
            } else {
                Err(format!("took {:.1} s, budget {budget} s ({detail})", elapsed.as_secs_f64()))
            }
        });
        match result {
            Ok(detail) => println!("PASS [{n:>2}] {name} ({:.2} s): {detail}", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL [{n:>2}] {name} ({:.2} s): {why}", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
