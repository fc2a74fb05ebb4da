//! Edge-consensus ADMM.
//!
//! Every edge `e = {i, j}` keeps copies `z_e^i`, `z_e^j` of its endpoint
//! values and scaled duals `u_e^i`, `u_e^j`. One iteration is
//!
//! ```text
//! x_i   <- prox_{|. - y_i| / (rho d_i)}( mean_e (z_e^i - u_e^i) )
//! z_e   <- pairwise soft-threshold of (x_i + u_e^i, x_j + u_e^j) at 2 lambda W_e / rho
//! u_e^i <- u_e^i + x_i - z_e^i
//! ```
//!
//! where the node prox is the identity at unsampled nodes.

use rayon::prelude::*;

use super::{Result, SolveError, SolveReport, SolverConfig};
use crate::graph::{empirical_error, total_variation, DataGraph, GraphError, GraphSignal, Observation};

/// Problem sizes below this run every update on the calling thread.
const PARALLEL_MIN: usize = 1 << 14;

pub fn nlasso_admm(g: &DataGraph, obs: &Observation, cfg: &SolverConfig) -> Result<SolveReport> {
    nlasso_admm_with(g, obs, cfg, |_, _| {})
}

/// As [`nlasso_admm`], calling `observe(iteration, x)` (1-based) after
/// every iteration.
pub fn nlasso_admm_with(
    g: &DataGraph,
    obs: &Observation,
    cfg: &SolverConfig,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<SolveReport> {
    cfg.validate()?;
    if obs.is_empty() {
        return Err(SolveError::NoSamples);
    }
    let n = g.node_count();
    if let Some(&bad) = obs.nodes().iter().find(|&&i| i >= n) {
        return Err(GraphError::NodeOutOfRange { node: bad, n }.into());
    }
    let target = obs.dense(n);
    let edges = g.edges();
    let m = edges.len();
    let rho = cfg.rho;
    let parallel = n.max(m) >= PARALLEL_MIN;

    let mut x = vec![0.0; n];
    // copies and duals indexed [2e] for endpoint i, [2e + 1] for endpoint j
    let mut z = vec![0.0; 2 * m];
    let mut u = vec![0.0; 2 * m];
    let mut z_prev = vec![0.0; 2 * m];
    let mut trace = Vec::with_capacity(cfg.max_iterations);
    let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    let mut iterations = 0;

    let node_update = |i: usize, x_i: &mut f64, z: &[f64], u: &[f64]| {
        let nbrs = g.neighbors(i);
        let Some(y) = target[i] else {
            if !nbrs.is_empty() {
                let mut acc = 0.0;
                for &(_, e) in nbrs {
                    let slot = 2 * e + usize::from(edges[e].i != i);
                    acc += z[slot] - u[slot];
                }
                *x_i = acc / nbrs.len() as f64;
            }
            return;
        };
        if nbrs.is_empty() {
            *x_i = y;
            return;
        }
        let mut acc = 0.0;
        for &(_, e) in nbrs {
            let slot = 2 * e + usize::from(edges[e].i != i);
            acc += z[slot] - u[slot];
        }
        let d = nbrs.len() as f64;
        let v = acc / d;
        let thresh = 1.0 / (rho * d);
        let gap = v - y;
        *x_i = if gap.abs() <= thresh { y } else { v - thresh.copysign(gap) };
    };
    let edge_update = |e: usize, pair: &mut [f64], x: &[f64], u: &[f64]| {
        let edge = &edges[e];
        let p = x[edge.i] + u[2 * e];
        let q = x[edge.j] + u[2 * e + 1];
        let mean = 0.5 * (p + q);
        let diff = p - q;
        let shrink = (diff.abs() - 2.0 * cfg.lambda * edge.weight / rho).max(0.0).copysign(diff);
        pair[0] = mean + 0.5 * shrink;
        pair[1] = mean - 0.5 * shrink;
    };

    for k in 1..=cfg.max_iterations {
        iterations = k;
        if parallel {
            x.par_iter_mut().enumerate().for_each(|(i, xi)| node_update(i, xi, &z, &u));
        } else {
            x.iter_mut().enumerate().for_each(|(i, xi)| node_update(i, xi, &z, &u));
        }
        std::mem::swap(&mut z, &mut z_prev);
        if parallel {
            z.par_chunks_mut(2).enumerate().for_each(|(e, pair)| edge_update(e, pair, &x, &u));
        } else {
            z.chunks_mut(2).enumerate().for_each(|(e, pair)| edge_update(e, pair, &x, &u));
        }
        let (mut r2, mut s2) = (0.0, 0.0);
        for (e, edge) in edges.iter().enumerate() {
            for (slot, node) in [(2 * e, edge.i), (2 * e + 1, edge.j)] {
                let r = x[node] - z[slot];
                u[slot] += r;
                r2 += r * r;
                let s = z[slot] - z_prev[slot];
                s2 += s * s;
            }
        }
        primal = r2.sqrt();
        dual = rho * s2.sqrt();
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            log::error!("ADMM diverged at node {i}, iteration {k}");
            return Err(SolveError::NonFinite(k));
        }
        let xs = GraphSignal::new(x.clone())?;
        let value = empirical_error(obs, &xs)? + cfg.lambda * total_variation(g, &xs)?;
        if !value.is_finite() {
            return Err(SolveError::NonFinite(k));
        }
        trace.push(value);
        observe(k, &x);
        converged = primal <= cfg.primal_tol && dual <= cfg.dual_tol;
        if converged && cfg.early_stop {
            break;
        }
    }
    log::debug!("ADMM finished after {iterations} iterations: primal {primal:.3e}, dual {dual:.3e}");
    Ok(SolveReport {
        estimate: GraphSignal::new(x)?,
        objective_trace: trace,
        iterations_run: iterations,
        converged,
        primal_residual: primal,
        dual_residual: dual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{clustered_signal, Partition};

    fn two_block_chain() -> (DataGraph, Partition) {
        let g = DataGraph::new(10, (0..9).map(|k| (k, k + 1, if k == 4 { 0.5 } else { 1.0 }))).unwrap();
        (g, Partition::consecutive(10, 5))
    }

    #[test]
    fn all_sampled_small_lambda_returns_samples() {
        let (g, _) = two_block_chain();
        let y: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin()).collect();
        let obs = Observation::new(10, y.iter().copied().enumerate().collect(), None).unwrap();
        let cfg = SolverConfig { lambda: 1e-6, rho: 1.0, max_iterations: 2000, ..Default::default() };
        let rep = nlasso_admm(&g, &obs, &cfg).unwrap();
        for (a, b) in rep.estimate.values().iter().zip(&y) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
        assert_eq!(rep.objective_trace.len(), rep.iterations_run);
    }

    #[test]
    fn noiseless_boundary_samples_recover_truth() {
        let (g, p) = two_block_chain();
        let truth = clustered_signal(&p, &[0.0, 2.0]).unwrap();
        let obs = Observation::from_signal(&truth, &[4, 5], None).unwrap();
        let cfg = SolverConfig { lambda: 0.25, rho: 1.0, max_iterations: 5000, early_stop: true, ..Default::default() };
        let rep = nlasso_admm(&g, &obs, &cfg).unwrap();
        let tv = total_variation(&g, &rep.estimate.sub(&truth).unwrap()).unwrap();
        assert!(tv < 1e-4, "TV distance {tv}");
    }

    #[test]
    fn errors() {
        let (g, _) = two_block_chain();
        let empty = Observation::new(10, vec![], None).unwrap();
        assert_eq!(nlasso_admm(&g, &empty, &SolverConfig::default()), Err(SolveError::NoSamples));
        let obs = Observation::new(10, vec![(0, 1.0)], None).unwrap();
        let bad = SolverConfig { rho: 0.0, ..Default::default() };
        assert!(matches!(nlasso_admm(&g, &obs, &bad), Err(SolveError::InvalidConfig(_))));
        let pair = DataGraph::new(2, [(0, 1, 1.0)]).unwrap();
        let overflow = Observation::new(2, vec![(0, f64::MAX), (1, f64::MAX)], None).unwrap();
        assert_eq!(nlasso_admm(&pair, &overflow, &SolverConfig::default()), Err(SolveError::NonFinite(1)));
    }

    #[test]
    fn observer_sees_every_iteration() {
        let (g, _) = two_block_chain();
        let obs = Observation::new(10, vec![(0, 1.0), (9, 3.0)], None).unwrap();
        let mut seen = Vec::new();
        let cfg = SolverConfig { max_iterations: 7, ..Default::default() };
        nlasso_admm_with(&g, &obs, &cfg, |k, x| seen.push((k, x.len()))).unwrap();
        assert_eq!(seen, (1..=7).map(|k| (k, 10)).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic() {
        let (g, _) = two_block_chain();
        let obs = Observation::new(10, vec![(1, 1.0), (8, -2.0)], None).unwrap();
        let cfg = SolverConfig::default();
        assert_eq!(nlasso_admm(&g, &obs, &cfg).unwrap(), nlasso_admm(&g, &obs, &cfg).unwrap());
    }
}
