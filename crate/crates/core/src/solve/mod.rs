//! Network Lasso recovery: `min_x sum_{i in M} |x[i] - y[i]| + lambda TV(x)`.

mod admm;
mod oracle;
mod postprocess;

pub use admm::{nlasso_admm, nlasso_admm_with};
pub use oracle::{lp_oracle, theorem1_bound, OracleSolution, MAX_ORACLE_NODES};
pub use postprocess::{postprocess, Refined};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{empirical_error, total_variation, DataGraph, GraphError, GraphSignal, Observation};
use crate::simplex::LpError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("sampling set is empty")]
    NoSamples,
    #[error("non-finite iterate at iteration {0}")]
    NonFinite(usize),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("{n} nodes exceed the oracle limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("L must exceed 1, got {0}")]
    InvalidL(f64),
    #[error("K must be positive, got {0}")]
    InvalidK(f64),
    #[error("eta must be positive, got {0}")]
    InvalidEta(f64),
    #[error("observation carries no true noise")]
    MissingNoise,
    #[error("edge {{{i}, {j}}} was cut but its endpoints stay connected")]
    InconsistentBoundary { i: usize, j: usize },
    #[error("recovered cluster {0} contains no sampled node")]
    EmptyCluster(usize),
    #[error("LP solve failed: {0}")]
    Lp(#[from] LpError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, SolveError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub lambda: f64,
    pub rho: f64,
    pub max_iterations: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    /// Stop as soon as both residuals fall below their tolerances.
    pub early_stop: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { lambda: 1.0, rho: 0.01, max_iterations: 300, primal_tol: 1e-6, dual_tol: 1e-6, early_stop: false }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.lambda) {
            return Err(SolveError::InvalidConfig(format!("lambda = {}", self.lambda)));
        }
        if !positive(self.rho) {
            return Err(SolveError::InvalidConfig(format!("rho = {}", self.rho)));
        }
        if self.max_iterations == 0 {
            return Err(SolveError::InvalidConfig("max_iterations = 0".into()));
        }
        if !positive(self.primal_tol) || !positive(self.dual_tol) {
            return Err(SolveError::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub estimate: GraphSignal,
    /// Objective of the iterate after each iteration.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

impl SolveReport {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }
}

/// `empirical_error(obs, x) + lambda * TV(x)`.
pub fn objective(g: &DataGraph, obs: &Observation, x: &GraphSignal, lambda: f64) -> Result<f64> {
    Ok(empirical_error(obs, x)? + lambda * total_variation(g, x)?)
}
