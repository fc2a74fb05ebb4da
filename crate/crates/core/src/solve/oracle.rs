use super::{Result, SolveError};
use crate::graph::{DataGraph, GraphError, GraphSignal, Observation};
use crate::simplex::{LinearProgram, Relation};

pub const MAX_ORACLE_NODES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub estimate: GraphSignal,
    pub value: f64,
}

/// Exact minimizer of the network Lasso through its epigraph LP
///
/// ```text
/// min  sum_{i in M} s_i + lambda sum_e W_e t_e
/// s.t. s_i >= +-(x_i - y_i),  t_e >= +-(x_i - x_j)
/// ```
pub fn lp_oracle(g: &DataGraph, obs: &Observation, lambda: f64) -> Result<OracleSolution> {
    let n = g.node_count();
    if n > MAX_ORACLE_NODES {
        return Err(SolveError::TooLarge { n, limit: MAX_ORACLE_NODES });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(SolveError::InvalidConfig(format!("lambda = {lambda}")));
    }
    if let Some(&bad) = obs.nodes().iter().find(|&&i| i >= n) {
        return Err(GraphError::NodeOutOfRange { node: bad, n }.into());
    }
    let mut lp = LinearProgram::new();
    let x: Vec<usize> = (0..n).map(|_| lp.add_var(0.0, true)).collect();
    for (i, y) in obs.samples() {
        let s = lp.add_var(1.0, false);
        lp.add_constraint(vec![(s, 1.0), (x[i], -1.0)], Relation::Ge, -y);
        lp.add_constraint(vec![(s, 1.0), (x[i], 1.0)], Relation::Ge, y);
    }
    for e in g.edges() {
        let t = lp.add_var(lambda * e.weight, false);
        lp.add_constraint(vec![(t, 1.0), (x[e.i], -1.0), (x[e.j], 1.0)], Relation::Ge, 0.0);
        lp.add_constraint(vec![(t, 1.0), (x[e.i], 1.0), (x[e.j], -1.0)], Relation::Ge, 0.0);
    }
    let sol = lp.solve()?;
    assert!(sol.value.is_finite(), "epigraph LP is bounded below by zero");
    Ok(OracleSolution { estimate: GraphSignal::new(sol.x[..n].to_vec())?, value: sol.value })
}

/// `(K + 4 / (L - 1)) sum_{i in M} |e[i]|`.
pub fn theorem1_bound(k: f64, l: f64, obs: &Observation) -> Result<f64> {
    if !(l > 1.0) {
        return Err(SolveError::InvalidL(l));
    }
    if !(k > 0.0) {
        return Err(SolveError::InvalidK(k));
    }
    let noise = obs.noise_l1().ok_or(SolveError::MissingNoise)?;
    Ok((k + 4.0 / (l - 1.0)) * noise)
}
