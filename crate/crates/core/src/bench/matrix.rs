use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunSummary;
use crate::solver::Status;
use crate::{Error, Result};

/// One run in the cost matrix. `cost` is gradient evaluations up to the first
/// successful iterate, empty when unsolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub problem: String,
    pub dim: usize,
    pub method: String,
    pub noise: f64,
    pub replicate: usize,
    pub status: Status,
    pub cost: Option<u64>,
}

impl CostRow {
    pub fn discarded(&self) -> bool {
        self.status == Status::SpuriousInitialStop
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CostMatrix {
    pub rows: Vec<CostRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscardStat {
    pub noise: f64,
    pub runs: usize,
    pub discarded: usize,
    pub percent: f64,
}

/// Median replicate cost per (problem, method) at one noise level;
/// `f64::INFINITY` marks unsolved or missing entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregated {
    pub methods: Vec<String>,
    pub problems: Vec<String>,
    pub dims: Vec<usize>,
    /// `costs[problem][method]`.
    pub costs: Vec<Vec<f64>>,
}

impl Aggregated {
    pub fn from_costs(methods: &[&str], dims: &[usize], costs: Vec<Vec<f64>>) -> Self {
        Aggregated {
            methods: methods.iter().map(|m| m.to_string()).collect(),
            problems: (0..dims.len()).map(|i| format!("p{i}")).collect(),
            dims: dims.to_vec(),
            costs,
        }
    }
}

/// Median with infinities sorting last; even counts average the middle pair.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

impl CostMatrix {
    pub fn from_summaries(runs: &[RunSummary]) -> Self {
        CostMatrix {
            rows: runs
                .iter()
                .map(|r| CostRow {
                    problem: r.problem.clone(),
                    dim: r.dim,
                    method: r.method.clone(),
                    noise: r.noise,
                    replicate: r.replicate,
                    status: r.status,
                    cost: r.cost,
                })
                .collect(),
        }
    }

    pub fn noise_levels(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.noise) {
                out.push(r.noise);
            }
        }
        out
    }

    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method) {
                out.push(r.method.clone());
            }
        }
        out
    }

    pub fn aggregate(&self, noise: f64, methods: &[String]) -> Aggregated {
        let mut problems: Vec<(String, usize)> = Vec::new();
        let mut samples: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.noise == noise) {
            let pi = match problems.iter().position(|(p, _)| *p == r.problem) {
                Some(i) => i,
                None => {
                    problems.push((r.problem.clone(), r.dim));
                    problems.len() - 1
                }
            };
            let Some(mi) = methods.iter().position(|m| *m == r.method) else {
                continue;
            };
            if r.discarded() {
                continue;
            }
            let c = r.cost.map_or(f64::INFINITY, |c| c as f64);
            samples.entry((pi, mi)).or_default().push(c);
        }
        let costs = (0..problems.len())
            .map(|pi| {
                (0..methods.len())
                    .map(|mi| {
                        samples
                            .get_mut(&(pi, mi))
                            .and_then(|v| median(v))
                            .unwrap_or(f64::INFINITY)
                    })
                    .collect()
            })
            .collect();
        Aggregated {
            methods: methods.to_vec(),
            dims: problems.iter().map(|(_, d)| *d).collect(),
            problems: problems.into_iter().map(|(p, _)| p).collect(),
            costs,
        }
    }

    pub fn discard_stats(&self) -> Vec<DiscardStat> {
        self.noise_levels()
            .into_iter()
            .map(|noise| {
                let at: Vec<&CostRow> = self.rows.iter().filter(|r| r.noise == noise).collect();
                let discarded = at.iter().filter(|r| r.discarded()).count();
                DiscardStat {
                    noise,
                    runs: at.len(),
                    discarded,
                    percent: 100.0 * discarded as f64 / at.len() as f64,
                }
            })
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rd = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
        let rows = rd.deserialize().collect::<std::result::Result<Vec<CostRow>, _>>()?;
        Ok(CostMatrix { rows })
    }
}

pub(crate) fn csv_io(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse(format!("{other:?}")),
        }
    } else {
        Error::Csv(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(problem: &str, method: &str, rep: usize, status: Status, cost: Option<u64>) -> CostRow {
        CostRow {
            problem: problem.into(),
            dim: 2,
            method: method.into(),
            noise: 0.0,
            replicate: rep,
            status,
            cost,
        }
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&mut []), None);
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0]), Some(2.5));
        assert_eq!(median(&mut [f64::INFINITY, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [f64::INFINITY, 1.0]), Some(f64::INFINITY));
    }

    #[test]
    fn aggregation_skips_discards_and_fills_gaps() {
        let m = CostMatrix {
            rows: vec![
                row("a", "x", 0, Status::Converged, Some(5)),
                row("a", "x", 1, Status::SpuriousInitialStop, Some(1)),
                row("a", "x", 2, Status::MaxIter, None),
                row("a", "y", 0, Status::Converged, Some(7)),
                row("b", "x", 0, Status::Converged, Some(3)),
            ],
        };
        let agg = m.aggregate(0.0, &["x".into(), "y".into()]);
        assert_eq!(agg.problems, vec!["a", "b"]);
        assert_eq!(agg.costs[0][0], f64::INFINITY); // median of {5, inf}
        assert_eq!(agg.costs[0][1], 7.0);
        assert_eq!(agg.costs[1][1], f64::INFINITY); // missing
        let d = m.discard_stats();
        assert_eq!((d[0].runs, d[0].discarded), (5, 1));
        assert_eq!(d[0].percent, 20.0);
    }

    #[test]
    fn csv_round_trip() {
        let m = CostMatrix {
            rows: vec![
                row("a", "nlcgr_p0.75_k1e6", 0, Status::Converged, Some(5)),
                CostRow {
                    noise: 1e-8,
                    ..row("b", "gd", 1, Status::MaxIter, None)
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        m.write_csv(&path).unwrap();
        assert_eq!(CostMatrix::read_csv(&path).unwrap(), m);
    }
}
