use serde::{Deserialize, Serialize};

use super::Aggregated;

/// Right-continuous step curve: `ordinates[i]` holds on `[abscissae[i], abscissae[i+1])`
/// and the value is 0 left of the first abscissa.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub method: String,
    pub abscissae: Vec<f64>,
    pub ordinates: Vec<f64>,
}

impl ProfileCurve {
    pub fn value_at(&self, t: f64) -> f64 {
        match self.abscissae.partition_point(|&a| a <= t) {
            0 => 0.0,
            i => self.ordinates[i - 1],
        }
    }
}

/// Curves `t -> #{p : score[p][m] <= t} / #problems`, evaluated on the pooled
/// sorted finite scores.
fn curves(methods: &[String], scores: &[Vec<f64>], empty_at: f64) -> Vec<ProfileCurve> {
    let n_prob = scores.len();
    let mut grid: Vec<f64> = scores.iter().flatten().copied().filter(|s| s.is_finite()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.is_empty() {
        grid.push(empty_at);
    }
    methods
        .iter()
        .enumerate()
        .map(|(mi, m)| {
            let mut mine: Vec<f64> = scores.iter().map(|row| row[mi]).collect();
            mine.sort_by(f64::total_cmp);
            let ordinates = grid
                .iter()
                .map(|&t| {
                    if n_prob == 0 {
                        0.0
                    } else {
                        mine.partition_point(|&s| s <= t) as f64 / n_prob as f64
                    }
                })
                .collect();
            ProfileCurve {
                method: m.clone(),
                abscissae: grid.clone(),
                ordinates,
            }
        })
        .collect()
}

/// Performance profile: ratio of each method's cost to the best cost on the
/// problem; unsolved entries get an infinite ratio.
pub fn performance_profile(agg: &Aggregated) -> Vec<ProfileCurve> {
    let ratios: Vec<Vec<f64>> = agg
        .costs
        .iter()
        .map(|row| {
            let best = row.iter().copied().fold(f64::INFINITY, f64::min);
            row.iter()
                .map(|&c| if c.is_finite() { c / best } else { f64::INFINITY })
                .collect()
        })
        .collect();
    curves(&agg.methods, &ratios, 1.0)
}

/// Data profile: cost in units of `n_p + 1` gradient evaluations.
pub fn data_profile(agg: &Aggregated) -> Vec<ProfileCurve> {
    let units: Vec<Vec<f64>> = agg
        .costs
        .iter()
        .zip(&agg.dims)
        .map(|(row, &n)| row.iter().map(|&c| c / (n as f64 + 1.0)).collect())
        .collect();
    curves(&agg.methods, &units, 1.0)
}

/// Per method, the number of problems it solves with a strictly lowest cost.
pub fn uniquely_fastest(agg: &Aggregated) -> Vec<usize> {
    let mut counts = vec![0; agg.methods.len()];
    for row in &agg.costs {
        let best = row.iter().copied().fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            continue;
        }
        let winners: Vec<usize> = (0..row.len()).filter(|&i| row[i] == best).collect();
        if let [only] = winners[..] {
            counts[only] += 1;
        }
    }
    counts
}
