//! Desk-scale unconstrained test problems and initial-gradient scaling.

mod problems;

use std::fmt;
use std::sync::Arc;

use crate::vecops::{all_finite, norm_inf};
use crate::{Error, Result};

pub use problems::registry;

/// A smooth objective with an analytic gradient.
pub trait Objective: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

/// An unconstrained test problem: objective, starting point and optional
/// global constants (gradient Lipschitz constant and a lower bound on the objective).
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub x0: Vec<f64>,
    pub lipschitz: Option<f64>,
    pub f_low: Option<f64>,
    objective: Arc<dyn Objective>,
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        x0: Vec<f64>,
        lipschitz: Option<f64>,
        f_low: Option<f64>,
        objective: impl Objective + 'static,
    ) -> Self {
        Self::from_arc(name, x0, lipschitz, f_low, Arc::new(objective))
    }

    pub fn from_arc(
        name: impl Into<String>,
        x0: Vec<f64>,
        lipschitz: Option<f64>,
        f_low: Option<f64>,
        objective: Arc<dyn Objective>,
    ) -> Self {
        Problem {
            name: name.into(),
            x0,
            lipschitz,
            f_low,
            objective,
        }
    }

    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.objective.gradient(x)
    }
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("lipschitz", &self.lipschitz)
            .field("f_low", &self.f_low)
            .finish()
    }
}

/// A problem whose objective and gradient are divided by
/// `max{1, ||grad(x0)||_inf}`.
#[derive(Clone, Debug)]
pub struct ScaledProblem {
    pub base: Problem,
    pub scale: f64,
}

impl ScaledProblem {
    pub fn name(&self) -> &str {
        &self.base.name
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn x0(&self) -> &[f64] {
        &self.base.x0
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x) / self.scale
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.base.gradient(x);
        for gi in &mut g {
            *gi /= self.scale;
        }
        g
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.base.lipschitz.map(|l| l / self.scale)
    }

    pub fn f_low(&self) -> Option<f64> {
        self.base.f_low.map(|f| f / self.scale)
    }

    /// Repackage the scaled objective as a plain problem (so it can be scaled again).
    pub fn to_problem(&self) -> Problem {
        Problem::from_arc(
            self.base.name.clone(),
            self.base.x0.clone(),
            self.lipschitz(),
            self.f_low(),
            Arc::new(self.clone()),
        )
    }
}

impl Objective for ScaledProblem {
    fn value(&self, x: &[f64]) -> f64 {
        ScaledProblem::value(self, x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        ScaledProblem::gradient(self, x)
    }
}

/// Scale a problem by `max{1, ||grad(x0)||_inf}`.
pub fn scale(problem: &Problem) -> Result<ScaledProblem> {
    let g0 = problem.gradient(&problem.x0);
    if !all_finite(&g0) {
        return Err(Error::NonFiniteInitialGradient(problem.name.clone()));
    }
    Ok(ScaledProblem {
        base: problem.clone(),
        scale: norm_inf(&g0).max(1.0),
    })
}

pub fn by_name(name: &str) -> Result<Problem> {
    registry()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))
}

/// Resolve a list of names, failing on the first unknown one.
pub fn select(names: &[String]) -> Result<Vec<Problem>> {
    let all = registry();
    names
        .iter()
        .map(|n| {
            all.iter()
                .find(|p| &p.name == n)
                .cloned()
                .ok_or_else(|| Error::UnknownProblem(n.clone()))
        })
        .collect()
}

pub fn names() -> Vec<String> {
    registry().into_iter().map(|p| p.name).collect()
}
