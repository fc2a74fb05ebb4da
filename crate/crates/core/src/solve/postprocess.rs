use super::{Result, SolveError};
use crate::graph::{DataGraph, GraphError, GraphSignal, Observation, Partition};

#[derive(Debug, Clone, PartialEq)]
pub struct Refined {
    /// Per-cluster mean of the observed values.
    pub signal: GraphSignal,
    /// Components left after cutting every edge with `|x_hat[i] - x_hat[j]| >= eta / 2`.
    pub partition: Partition,
}

/// Cuts large jumps of `x_hat`, checks that the cut edges are exactly the
/// boundary of the induced components, and replaces each component by the
/// mean of its samples.
pub fn postprocess(g: &DataGraph, obs: &Observation, x_hat: &GraphSignal, eta: f64) -> Result<Refined> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(SolveError::InvalidEta(eta));
    }
    let n = g.node_count();
    if x_hat.len() != n {
        return Err(GraphError::DimensionMismatch { expected: n, found: x_hat.len() }.into());
    }
    let cut: Vec<bool> = g.edges().iter().map(|e| (x_hat[e.i] - x_hat[e.j]).abs() >= eta / 2.0).collect();
    let (label, count) = g.components_with(|id| !cut[id]);
    if let Some(e) = g.edges().iter().zip(&cut).find(|(e, &c)| c && label[e.i] == label[e.j]).map(|(e, _)| e) {
        return Err(SolveError::InconsistentBoundary { i: e.i, j: e.j });
    }
    let mut sum = vec![0.0; count];
    let mut hits = vec![0usize; count];
    for (i, y) in obs.samples() {
        if i >= n {
            return Err(GraphError::NodeOutOfRange { node: i, n }.into());
        }
        sum[label[i]] += y;
        hits[label[i]] += 1;
    }
    if let Some(c) = hits.iter().position(|&h| h == 0) {
        return Err(SolveError::EmptyCluster(c));
    }
    let means: Vec<f64> = sum.iter().zip(&hits).map(|(s, &h)| s / h as f64).collect();
    let signal = GraphSignal::new(label.iter().map(|&c| means[c]).collect())?;
    Ok(Refined { signal, partition: Partition::new(label)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::clustered_signal;

    fn chain(n: usize) -> DataGraph {
        DataGraph::new(n, (0..n - 1).map(|k| (k, k + 1, 1.0))).unwrap()
    }

    #[test]
    fn clustered_estimate_becomes_sample_means() {
        let g = chain(6);
        let p = Partition::consecutive(6, 3);
        let x_hat = clustered_signal(&p, &[1.0, 5.0]).unwrap();
        let obs = Observation::new(6, vec![(0, 0.5), (1, 1.5), (2, 1.3), (5, 4.0)], None).unwrap();
        let out = postprocess(&g, &obs, &x_hat, 2.0).unwrap();
        assert!(out.partition.same_grouping(&p));
        let want = [1.1, 1.1, 1.1, 4.0, 4.0, 4.0];
        for (a, b) in out.signal.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unsampled_cluster_is_an_error() {
        let g = chain(6);
        let x_hat = clustered_signal(&Partition::consecutive(6, 3), &[1.0, 5.0]).unwrap();
        let obs = Observation::new(6, vec![(0, 1.0)], None).unwrap();
        assert_eq!(postprocess(&g, &obs, &x_hat, 2.0), Err(SolveError::EmptyCluster(1)));
    }

    #[test]
    fn cut_inside_a_component_is_inconsistent() {
        // triangle where only one edge jumps
        let g = DataGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let x_hat = GraphSignal::new(vec![0.0, 0.9, 1.8]).unwrap();
        let obs = Observation::new(3, vec![(0, 0.0)], None).unwrap();
        assert_eq!(postprocess(&g, &obs, &x_hat, 2.0), Err(SolveError::InconsistentBoundary { i: 0, j: 2 }));
        assert_eq!(postprocess(&g, &obs, &x_hat, 0.0), Err(SolveError::InvalidEta(0.0)));
    }
}
