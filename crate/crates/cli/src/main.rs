use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use noisyls::bench::{
    self, default_sets, emit, profile_sets, read_summaries, restart_tables, Artifacts, CostMatrix,
    ExperimentPlan, RunSummary,
};
use noisyls::solver::{run_labeled, MethodSpec, RunResult};
use noisyls::{testbed, theory};

#[derive(Parser)]
#[command(name = "noisyls", version, about = "Noisy line-search solvers with restart conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method on one problem and print a trace summary.
    Solve(SolveArgs),
    /// Sweep problems x methods x noise levels x replicates and write all artifacts.
    Bench(BenchArgs),
    /// Recompute performance and data profiles from a stored cost matrix.
    Profiles(ProfilesArgs),
    /// Restart-percentage tables from stored run summaries.
    Tables(TablesArgs),
    /// Check a stored run against the complexity guarantees.
    Verify(VerifyArgs),
    /// List the registered problems.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long = "problems", alias = "problem")]
    problem: String,
    /// gd | nlcg | nlcgr | lbfgs | lbfgsr, optionally with a cell: nlcgr:0.5:1e3
    #[arg(long = "methods", alias = "method", default_value = "lbfgsr")]
    method: MethodSpec,
    /// Function noise level eps_f; gradient noise uses sqrt(eps_f).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Draw gradient noise with the iterate-dependent radius for this sigma_phi.
    #[arg(long)]
    sigma_phi: Option<f64>,
    /// Override eps_g (defaults to sqrt(eps_f)).
    #[arg(long)]
    eps_g: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the full run (with trace) as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON plan; flags given explicitly override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    problems: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<MethodSpec>>,
    #[arg(long, value_delimiter = ',')]
    noise: Option<Vec<f64>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    p_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    kappa_grid: Option<Vec<f64>>,
    /// Skip the restarted (p, kappa) grid.
    #[arg(long)]
    no_grid: bool,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value = "bench_out")]
    out: PathBuf,
}

#[derive(Args)]
struct ProfilesArgs {
    /// cost_matrix.csv written by `bench`.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Restrict to these noise levels.
    #[arg(long, value_delimiter = ',')]
    noise: Option<Vec<f64>>,
    #[arg(long, default_value = "profiles_out")]
    out: PathBuf,
}

#[derive(Args)]
struct TablesArgs {
    /// runs.csv written by `bench`.
    #[arg(long)]
    runs: PathBuf,
    #[arg(long, value_delimiter = ',')]
    p_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    kappa_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    noise: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run JSON written by `solve --out`.
    input: PathBuf,
    /// Write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => run_bench(a),
        Command::Profiles(a) => profiles(a),
        Command::Tables(a) => tables(a),
        Command::Verify(a) => verify(a),
        Command::List => {
            for p in testbed::registry() {
                let l = p.lipschitz.map_or("-".into(), |l| format!("{l}"));
                let f = p.f_low.map_or("-".into(), |f| format!("{f}"));
                println!("{:<24} n={:<6} L={:<8} f_low={}", p.name, p.dim(), l, f);
            }
            Ok(())
        }
    }
}

fn solve(a: SolveArgs) -> Result<()> {
    let problem = testbed::scale(&testbed::by_name(&a.problem)?)?;
    let mut cfg = a.method.config().with_noise(a.noise);
    if let Some(m) = a.max_iter {
        cfg.max_iter = m;
    }
    if let Some(e) = a.eps_g {
        cfg.eps_g = e;
    }
    cfg.assumption4_sigma_phi = a.sigma_phi;
    let r = run_labeled(&problem, &cfg, a.seed, &a.method.to_string())?;
    if let Some(path) = &a.out {
        write_json(path, &r)?;
    }
    match a.format {
        Format::Text => print_run(&r),
        Format::Json => println!("{}", serde_json::to_string_pretty(&r)?),
        Format::Csv => {
            let s = RunSummary::from_result(&r, a.noise, 0);
            println!("problem,dim,method,noise,seed,status,aborted,solved,cost,iterations,restarts,restart_fraction,n_f_evals,n_g_evals,f_final,final_grad_inf");
            println!(
                "{},{},{},{},{},{:?},{},{},{},{},{},{},{},{},{},{}",
                s.problem,
                s.dim,
                s.method,
                s.noise,
                s.seed,
                s.status,
                s.aborted,
                s.solved,
                s.cost.map_or(String::new(), |c| c.to_string()),
                s.iterations,
                s.restarts,
                s.restart_fraction,
                s.n_f_evals,
                s.n_g_evals,
                s.f_final,
                s.final_grad_inf
            );
        }
    }
    Ok(())
}

fn print_run(r: &RunResult) {
    println!("{} on {} (n = {}), seed {}", r.method, r.problem, r.dim, r.seed);
    println!(
        "status {:?}{}  iterations {}  f-evals {}  g-evals {}",
        r.status,
        if r.aborted { " (aborted)" } else { "" },
        r.iterations,
        r.n_f_evals,
        r.n_g_evals
    );
    println!(
        "solved {}  cost {}  restarts {:.2}%",
        r.solved,
        r.cost().map_or("-".into(), |c| c.to_string()),
        100.0 * r.restart_fraction
    );
    println!("f0 {:.6e}  f_final {:.6e}  |grad|_inf {:.3e}", r.f0, r.f_final, r.final_true_grad_norm_inf);
    let step = (r.trace.len() / 10).max(1);
    println!("{:>6} {:>10} {:>4} {:>12} {:>12} {:>8}", "k", "alpha", "j", "f", "|g|_inf", "restart");
    for t in r.trace.iter().step_by(step) {
        println!(
            "{:>6} {:>10.3e} {:>4} {:>12.5e} {:>12.5e} {:>8}",
            t.k, t.alpha, t.j, t.f_true, t.g_norm_inf, t.restarted
        );
    }
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let mut plan = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ExperimentPlan::default(),
    };
    if let Some(v) = a.problems {
        plan.problems = v;
    }
    if let Some(v) = a.methods {
        plan.methods = v;
    }
    if let Some(v) = a.noise {
        plan.noise_levels = v;
    }
    if let Some(v) = a.reps {
        plan.replicates = v;
    }
    if let Some(v) = a.seed {
        plan.master_seed = v;
    }
    if let Some(v) = a.p_grid {
        plan.p_grid = v;
    }
    if let Some(v) = a.kappa_grid {
        plan.kappa_grid = v;
    }
    if a.no_grid {
        plan.p_grid.clear();
        plan.kappa_grid.clear();
    }
    if let Some(v) = a.max_iter {
        plan.max_iter = v;
    }
    plan.workers = a.workers;
    plan.output_dir = Some(a.out.clone());
    plan.validate()?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;

    eprintln!(
        "{} problems x {} methods x {} noise levels x {} replicates = {} runs",
        plan.problems.len(),
        plan.all_methods().len(),
        plan.noise_levels.len(),
        plan.replicates,
        plan.n_runs()
    );
    let start = Instant::now();
    let runs = bench::run_plan(&plan)?;
    eprintln!("runs finished in {:.1} s", start.elapsed().as_secs_f64());
    let art = Artifacts::build(&plan, runs);
    let files = emit(&art, &a.out)?;
    report(&art);
    eprintln!("wrote {} files to {}", files.len(), a.out.display());
    Ok(())
}

fn report(art: &Artifacts) {
    println!("discarded runs per noise level:");
    for d in &art.discards {
        println!("  eps_f = {:<8e} {:>6} / {:<6} ({:.2}%)", d.noise, d.discarded, d.runs, d.percent);
    }
    for t in &art.tables {
        if let Some(b) = t.best() {
            println!(
                "{:<7} eps_f = {:<8e} fewest restarts at p = {}, kappa = {:e}: {:.2}%",
                t.family,
                t.noise,
                b.p,
                b.kappa,
                b.mean_percent.unwrap_or(f64::NAN)
            );
        }
    }
}

fn profiles(a: ProfilesArgs) -> Result<()> {
    let mut matrix = CostMatrix::read_csv(&a.matrix)?;
    if let Some(levels) = &a.noise {
        matrix.rows.retain(|r| levels.contains(&r.noise));
    }
    let present = matrix.methods();
    let methods = match a.methods {
        Some(m) => {
            for name in &m {
                if !present.contains(name) {
                    bail!("method {name} not in {}", a.matrix.display());
                }
            }
            m
        }
        None => {
            let defaults: Vec<String> = MethodSpec::defaults().iter().map(|m| m.to_string()).collect();
            if defaults.iter().all(|d| present.contains(d)) {
                defaults
            } else {
                present
            }
        }
    };
    let art = Artifacts {
        plan: None,
        runs: Vec::new(),
        discards: matrix.discard_stats(),
        tables: Vec::new(),
        profiles: profile_sets(&matrix, &default_sets(&methods, None)),
        matrix,
    };
    let files = emit(&art, &a.out)?;
    for ps in &art.profiles {
        let finals: Vec<String> = ps
            .curves
            .iter()
            .map(|c| format!("{}={:.3}", c.method, c.ordinates.last().copied().unwrap_or(0.0)))
            .collect();
        println!("{:<11} eps_f = {:<8e} solved: {}", ps.kind, ps.noise, finals.join(" "));
    }
    eprintln!("wrote {} files to {}", files.len(), a.out.display());
    Ok(())
}

fn tables(a: TablesArgs) -> Result<()> {
    let mut runs = read_summaries(&a.runs)?;
    if let Some(levels) = &a.noise {
        runs.retain(|r| levels.contains(&r.noise));
    }
    let p_grid = a.p_grid.unwrap_or_else(|| bench::DEFAULT_P_GRID.to_vec());
    let kappa_grid = a.kappa_grid.unwrap_or_else(|| bench::DEFAULT_KAPPA_GRID.to_vec());
    let tables = restart_tables(&runs, &p_grid, &kappa_grid);
    for t in &tables {
        println!("{}", t.to_markdown());
    }
    if let Some(out) = &a.out {
        let matrix = CostMatrix::from_summaries(&runs);
        let art = Artifacts {
            plan: None,
            runs: Vec::new(),
            discards: matrix.discard_stats(),
            tables,
            profiles: Vec::new(),
            matrix,
        };
        let files = emit(&art, out)?;
        eprintln!("wrote {} files to {}", files.len(), out.display());
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<()> {
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let run: RunResult = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.input.display()))?;
    let report = theory::verify_run(&run);
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    match a.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        _ => print!("{report}"),
    }
    if report.verifiable && !report.passed() {
        std::process::exit(1);
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
