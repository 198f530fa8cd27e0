use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::matrix::csv_io;
use super::{
    data_profile, performance_profile, profile_svg, restart_table, uniquely_fastest, CostMatrix,
    DiscardStat, ExperimentPlan, ProfileCurve, RestartTable, RunSummary,
};
use crate::solver::MethodSpec;
use crate::{Error, Result};

pub const RESTARTED_FAMILIES: [&str; 2] = ["nlcgr", "lbfgsr"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    /// `performance` or `data`.
    pub kind: String,
    pub set: String,
    pub noise: f64,
    pub curves: Vec<ProfileCurve>,
    pub uniquely_fastest: Vec<usize>,
    pub n_problems: usize,
}

/// Everything a sweep produces, kept in memory alongside what [`emit`] writes.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifacts {
    pub plan: Option<ExperimentPlan>,
    pub runs: Vec<RunSummary>,
    pub matrix: CostMatrix,
    pub discards: Vec<DiscardStat>,
    pub tables: Vec<RestartTable>,
    pub profiles: Vec<ProfileSet>,
}

/// File-name form of a noise level: `0e0`, `1e-8`, ...
pub fn noise_label(eps_f: f64) -> String {
    format!("{eps_f:e}")
}

/// Profile the named method sets at every noise level of the matrix.
pub fn profile_sets(matrix: &CostMatrix, sets: &[(String, Vec<String>)]) -> Vec<ProfileSet> {
    let mut out = Vec::new();
    for noise in matrix.noise_levels() {
        for (name, methods) in sets {
            if methods.is_empty() {
                continue;
            }
            let agg = matrix.aggregate(noise, methods);
            let fastest = uniquely_fastest(&agg);
            for (kind, curves) in [("performance", performance_profile(&agg)), ("data", data_profile(&agg))] {
                out.push(ProfileSet {
                    kind: kind.to_string(),
                    set: name.clone(),
                    noise,
                    curves,
                    uniquely_fastest: fastest.clone(),
                    n_problems: agg.problems.len(),
                });
            }
        }
    }
    out
}

/// The default method sets: the listed methods, then each restarted family's grid.
pub fn default_sets(methods: &[String], plan: Option<&ExperimentPlan>) -> Vec<(String, Vec<String>)> {
    let mut sets = vec![("main".to_string(), methods.to_vec())];
    if let Some(plan) = plan {
        for fam in RESTARTED_FAMILIES {
            let grid: Vec<String> = plan
                .all_methods()
                .iter()
                .filter(|m| m.family() == fam)
                .filter(|m| {
                    m.grid_cell().is_some_and(|(p, k)| plan.p_grid.contains(&p) && plan.kappa_grid.contains(&k))
                })
                .map(|m| m.to_string())
                .collect();
            if !grid.is_empty() {
                sets.push((format!("{fam}_grid"), grid));
            }
        }
    }
    sets
}

/// Restart tables for both restarted families at every noise level present.
pub fn restart_tables(runs: &[RunSummary], p_grid: &[f64], kappa_grid: &[f64]) -> Vec<RestartTable> {
    let mut levels: Vec<f64> = Vec::new();
    for r in runs {
        if !levels.contains(&r.noise) {
            levels.push(r.noise);
        }
    }
    let mut out = Vec::new();
    if p_grid.is_empty() || kappa_grid.is_empty() {
        return out;
    }
    for fam in RESTARTED_FAMILIES {
        for &noise in &levels {
            out.push(restart_table(runs, fam, noise, p_grid, kappa_grid));
        }
    }
    out
}

impl Artifacts {
    pub fn build(plan: &ExperimentPlan, runs: Vec<RunSummary>) -> Self {
        let matrix = CostMatrix::from_summaries(&runs);
        let listed: Vec<String> = plan.methods.iter().map(MethodSpec::to_string).collect();
        let profiles = profile_sets(&matrix, &default_sets(&listed, Some(plan)));
        Artifacts {
            discards: matrix.discard_stats(),
            tables: restart_tables(&runs, &plan.p_grid, &plan.kappa_grid),
            plan: Some(plan.clone()),
            runs,
            matrix,
            profiles,
        }
    }
}

#[derive(Serialize)]
struct Meta {
    aggregation: &'static str,
    unsolved: &'static str,
    cost: &'static str,
    data_profile_unit: &'static str,
    discard_rule: &'static str,
}

const META: Meta = Meta {
    aggregation: "median over non-discarded replicates per (problem, method)",
    unsolved: "infinite cost and ratio; missing entries count as unsolved",
    cost: "gradient evaluations up to the first iterate passing the success test",
    data_profile_unit: "n_p + 1 gradient evaluations",
    discard_rule: "runs with status SpuriousInitialStop are dropped from costs, profiles and tables",
};

#[derive(Serialize)]
struct CurvePoint<'a> {
    method: &'a str,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct ProfileSummaryRow<'a> {
    kind: &'a str,
    set: &'a str,
    noise: f64,
    method: &'a str,
    final_fraction: f64,
    uniquely_fastest: usize,
    n_problems: usize,
}

#[derive(Serialize)]
struct TableRow<'a> {
    family: &'a str,
    noise: f64,
    p: f64,
    kappa: f64,
    mean_percent: Option<f64>,
    runs: usize,
    is_min: bool,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// Write every artifact under `dir` and return the paths written.
pub fn emit(artifacts: &Artifacts, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut path = |name: &str| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };

    if let Some(plan) = &artifacts.plan {
        write_json(&path("plan.json"), plan)?;
    }
    write_json(&path("meta.json"), &META)?;
    if !artifacts.runs.is_empty() {
        write_csv(&path("runs.csv"), &artifacts.runs)?;
        write_json(&path("runs.json"), &artifacts.runs)?;
    }
    artifacts.matrix.write_csv(&path("cost_matrix.csv"))?;
    write_csv(&path("discards.csv"), &artifacts.discards)?;
    write_json(&path("discards.json"), &artifacts.discards)?;

    if !artifacts.tables.is_empty() {
        let mut best = Vec::new();
        for t in &artifacts.tables {
            let stem = format!("restarts_{}_eps{}", t.family, noise_label(t.noise));
            write_csv(
                &path(&format!("{stem}.csv")),
                t.cells.iter().map(|c| TableRow {
                    family: &t.family,
                    noise: t.noise,
                    p: c.p,
                    kappa: c.kappa,
                    mean_percent: c.mean_percent,
                    runs: c.runs,
                    is_min: c.is_min,
                }),
            )?;
            write_text(&path(&format!("{stem}.md")), &t.to_markdown())?;
            if let Some(c) = t.best() {
                best.push(TableRow {
                    family: &t.family,
                    noise: t.noise,
                    p: c.p,
                    kappa: c.kappa,
                    mean_percent: c.mean_percent,
                    runs: c.runs,
                    is_min: true,
                });
            }
        }
        write_csv(&path("restarts_best.csv"), best)?;
    }

    let mut summary = Vec::new();
    for ps in &artifacts.profiles {
        let short = if ps.kind == "performance" { "perf" } else { "data" };
        let stem = format!("{short}_{}_eps{}", ps.set, noise_label(ps.noise));
        write_csv(
            &path(&format!("{stem}.csv")),
            ps.curves.iter().flat_map(|c| {
                c.abscissae.iter().zip(&c.ordinates).map(|(&x, &y)| CurvePoint {
                    method: &c.method,
                    x,
                    y,
                })
            }),
        )?;
        let (title, x_label) = if ps.kind == "performance" {
            ("Performance profile", "ratio to best cost (tau)")
        } else {
            ("Data profile", "budget in units of n_p + 1 gradient evaluations")
        };
        let title = format!("{title}: {} at eps_f = {}", ps.set, noise_label(ps.noise));
        write_text(&path(&format!("{stem}.svg")), &profile_svg(&title, x_label, &ps.curves))?;
        for (c, &fast) in ps.curves.iter().zip(&ps.uniquely_fastest) {
            summary.push(ProfileSummaryRow {
                kind: &ps.kind,
                set: &ps.set,
                noise: ps.noise,
                method: &c.method,
                final_fraction: c.ordinates.last().copied().unwrap_or(0.0),
                uniquely_fastest: fast,
                n_problems: ps.n_problems,
            });
        }
    }
    if !summary.is_empty() {
        write_csv(&path("profiles_summary.csv"), summary)?;
    }
    Ok(written)
}

/// Read back the `runs.csv` written by [`emit`].
pub fn read_summaries(path: &Path) -> Result<Vec<RunSummary>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    let rows = rd.deserialize().collect::<std::result::Result<Vec<RunSummary>, _>>()?;
    Ok(rows)
}
