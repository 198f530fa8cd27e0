use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::RunSummary;
use crate::solver::MethodSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartCell {
    pub p: f64,
    pub kappa: f64,
    /// Mean over runs of the percentage of restarted iterations; empty when no run fed the cell.
    pub mean_percent: Option<f64>,
    pub runs: usize,
    pub is_min: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartTable {
    pub family: String,
    pub noise: f64,
    pub p_grid: Vec<f64>,
    pub kappa_grid: Vec<f64>,
    /// Row-major over `p_grid` then `kappa_grid`.
    pub cells: Vec<RestartCell>,
}

/// Mean restart percentage per `(p, kappa)` cell for one restarted family
/// (`nlcgr` or `lbfgsr`) at one noise level. Discarded runs and runs that
/// stopped at `x_0` are left out.
pub fn restart_table(
    runs: &[RunSummary],
    family: &str,
    noise: f64,
    p_grid: &[f64],
    kappa_grid: &[f64],
) -> RestartTable {
    let mut cells = Vec::with_capacity(p_grid.len() * kappa_grid.len());
    for &p in p_grid {
        for &kappa in kappa_grid {
            let pct: Vec<f64> = runs
                .iter()
                .filter(|r| r.noise == noise && !r.discarded() && r.iterations > 0)
                .filter(|r| {
                    r.method.parse::<MethodSpec>().is_ok_and(|m| {
                        m.family() == family && m.grid_cell() == Some((p, kappa))
                    })
                })
                .map(|r| 100.0 * r.restart_fraction)
                .collect();
            cells.push(RestartCell {
                p,
                kappa,
                mean_percent: (!pct.is_empty()).then(|| pct.iter().sum::<f64>() / pct.len() as f64),
                runs: pct.len(),
                is_min: false,
            });
        }
    }
    let min = cells
        .iter()
        .filter_map(|c| c.mean_percent)
        .fold(f64::INFINITY, f64::min);
    for c in &mut cells {
        c.is_min = c.mean_percent == Some(min);
    }
    RestartTable {
        family: family.to_string(),
        noise,
        p_grid: p_grid.to_vec(),
        kappa_grid: kappa_grid.to_vec(),
        cells,
    }
}

impl RestartTable {
    pub fn cell(&self, p: f64, kappa: f64) -> Option<&RestartCell> {
        self.cells.iter().find(|c| c.p == p && c.kappa == kappa)
    }

    /// The highlighted minimum (first in grid order on ties).
    pub fn best(&self) -> Option<&RestartCell> {
        self.cells.iter().find(|c| c.is_min)
    }

    pub fn has_gaps(&self) -> bool {
        self.cells.iter().any(|c| c.mean_percent.is_none())
    }

    /// Markdown grid: one row per `p`, one column per `kappa`, minimum in bold,
    /// gaps as `--`.
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} restarts (%), eps_f = {:e}", self.family, self.noise);
        let _ = writeln!(s);
        let head: Vec<String> = self.kappa_grid.iter().map(|k| format!("k={k:e}")).collect();
        let _ = writeln!(s, "| p | {} |", head.join(" | "));
        let _ = writeln!(s, "|---|{}", "---|".repeat(self.kappa_grid.len()));
        for (i, p) in self.p_grid.iter().enumerate() {
            let row: Vec<String> = self.cells[i * self.kappa_grid.len()..(i + 1) * self.kappa_grid.len()]
                .iter()
                .map(|c| match (c.mean_percent, c.is_min) {
                    (None, _) => "--".to_string(),
                    (Some(v), true) => format!("**{v:.2}**"),
                    (Some(v), false) => format!("{v:.2}"),
                })
                .collect();
            let _ = writeln!(s, "| {p} | {} |", row.join(" | "));
        }
        if self.has_gaps() {
            let _ = writeln!(s, "\n-- : no runs for this cell");
        }
        s
    }
}
