//! Small hand-built instances.

use crate::graph::{DataGraph, Partition};

/// Two clusters joined by a single unit-weight bridge `i - j`, with one
/// sampled node on each side attached to the bridge endpoint by a weight-4
/// edge.
///
/// ```text
///   C1: a(0) - m(1) - i(2)  ==  j(3) - n(4) - b(5) :C2
///        \__________/              \__________/
/// ```
#[derive(Debug, Clone)]
pub struct BridgedPair {
    pub graph: DataGraph,
    pub partition: Partition,
    /// `[m, n]`.
    pub sampled: Vec<usize>,
    pub m: usize,
    pub i: usize,
    pub j: usize,
    pub n: usize,
}

pub fn bridged_pair() -> BridgedPair {
    let graph = DataGraph::new(
        6,
        [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 4.0), (2, 3, 1.0), (3, 4, 4.0), (3, 5, 1.0), (4, 5, 1.0)],
    )
    .expect("static fixture");
    let partition = Partition::new(vec![0, 0, 0, 1, 1, 1]).expect("static fixture");
    BridgedPair { graph, partition, sampled: vec![1, 4], m: 1, i: 2, j: 3, n: 4 }
}

/// Chain of `n` nodes cut into two equal halves; intra edges weigh 1 and
/// the middle edge weighs `boundary_weight`.
pub fn two_cluster_chain(n: usize, boundary_weight: f64) -> (DataGraph, Partition) {
    assert!(n >= 2 && n.is_multiple_of(2), "two_cluster_chain needs an even node count");
    let half = n / 2;
    let graph = DataGraph::new(n, (0..n - 1).map(|k| (k, k + 1, if k + 1 == half { boundary_weight } else { 1.0 })))
        .expect("chain with positive weights");
    (graph, Partition::consecutive(n, half))
}
