//! Weighted undirected data graphs, node signals, partitions and the
//! total-variation seminorms defined on them.
//!
//! Node ids are dense `0..n`. Every undirected edge is stored exactly once as
//! `(i, j)` with `i < j`, and the edge list is kept sorted ascending so that
//! every sum over edges runs in the same order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of an edge in [`DataGraph::edges`].
pub type EdgeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("edge {{{i}, {j}}} has invalid weight {weight}")]
    InvalidWeight { i: usize, j: usize, weight: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("edge id {0} is not an edge of the graph")]
    UnknownEdge(EdgeId),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("node {0} sampled more than once")]
    DuplicateSample(usize),
    #[error("reference signal is identically zero")]
    ZeroSignal,
}

pub type Result<T> = std::result::Result<T, GraphError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

impl Edge {
    /// Endpoint of the edge opposite to `node`.
    pub fn other(&self, node: usize) -> usize {
        if self.i == node {
            self.j
        } else {
            self.i
        }
    }
}

/// Undirected weighted graph `G = (V, E, W)` with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DataGraph {
    n: usize,
    edges: Vec<Edge>,
    /// Per node: `(neighbor, edge id)` in ascending neighbor order.
    adjacency: Vec<Vec<(usize, EdgeId)>>,
}

impl DataGraph {
    /// Builds a graph from `(i, j, w)` triples in either orientation.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut list = Vec::new();
        for (a, b, w) in edges {
            for node in [a, b] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::InvalidWeight { i: a, j: b, weight: w });
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            list.push(Edge { i, j, weight: w });
        }
        list.sort_by_key(|x| (x.i, x.j));
        for pair in list.windows(2) {
            if (pair[0].i, pair[0].j) == (pair[1].i, pair[1].j) {
                return Err(GraphError::DuplicateEdge(pair[0].i, pair[0].j));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for (id, e) in list.iter().enumerate() {
            adjacency[e.i].push((e.j, id));
            adjacency[e.j].push((e.i, id));
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Self { n, edges: list, adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    /// Neighbors of `node` as `(neighbor, edge id)` pairs.
    pub fn neighbors(&self, node: usize) -> &[(usize, EdgeId)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// Sum of the weights of all edges at `node`.
    pub fn weighted_degree(&self, node: usize) -> f64 {
        self.adjacency[node].iter().map(|&(_, e)| self.edges[e].weight).sum()
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<EdgeId> {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search_by(|e| (e.i, e.j).cmp(&(i, j))).ok()
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.edge_id(a, b).map(|id| self.edges[id].weight)
    }

    /// Connected components as a node -> component label map (labels in
    /// order of each component's smallest node), restricted to the edges for
    /// which `keep` returns true.
    pub fn components_with(&self, keep: impl Fn(EdgeId) -> bool) -> (Vec<usize>, usize) {
        let mut label = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, e) in &self.adjacency[u] {
                    if label[v] == usize::MAX && keep(e) {
                        label[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn is_connected(&self) -> bool {
        self.components_with(|_| true).1 == 1
    }

    fn check_signal(&self, x: &GraphSignal) -> Result<()> {
        if x.len() != self.n {
            return Err(GraphError::DimensionMismatch { expected: self.n, found: x.len() });
        }
        Ok(())
    }
}

/// Real-valued node labeling `x[.]`, also used for observations, estimates
/// and errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct GraphSignal(Vec<f64>);

impl GraphSignal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(GraphError::NonFinite(idx));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    /// Pointwise `self - other`.
    pub fn sub(&self, other: &GraphSignal) -> Result<GraphSignal> {
        if self.len() != other.len() {
            return Err(GraphError::DimensionMismatch { expected: self.len(), found: other.len() });
        }
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GraphSignal> {
        GraphSignal::new(self.0.iter().map(|&v| f(v)).collect())
    }
}

impl std::ops::Index<usize> for GraphSignal {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for GraphSignal {
    type Error = GraphError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<GraphSignal> for Vec<f64> {
    fn from(s: GraphSignal) -> Vec<f64> {
        s.0
    }
}

/// Disjoint clusters covering all nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    cluster_of: Vec<usize>,
    cluster_count: usize,
}

impl Partition {
    /// Cluster labels must be `0..k` with every label used at least once.
    pub fn new(cluster_of: Vec<usize>) -> Result<Self> {
        if cluster_of.is_empty() {
            return Err(GraphError::Empty);
        }
        let cluster_count = cluster_of.iter().max().map_or(0, |&m| m + 1);
        let mut sizes = vec![0usize; cluster_count];
        for &c in &cluster_of {
            sizes[c] += 1;
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(GraphError::EmptyCluster(empty));
        }
        Ok(Self { cluster_of, cluster_count })
    }

    pub fn single(n: usize) -> Self {
        Self { cluster_of: vec![0; n], cluster_count: 1 }
    }

    /// Consecutive blocks of `block` nodes; the last block may be shorter.
    pub fn consecutive(n: usize, block: usize) -> Self {
        let cluster_of: Vec<usize> = (0..n).map(|i| i / block.max(1)).collect();
        let cluster_count = cluster_of.last().map_or(0, |&c| c + 1);
        Self { cluster_of, cluster_count }
    }

    pub fn node_count(&self) -> usize {
        self.cluster_of.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        self.cluster_of[node]
    }

    pub fn labels(&self) -> &[usize] {
        &self.cluster_of
    }

    /// Member lists per cluster, each ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count];
        for (node, &c) in self.cluster_of.iter().enumerate() {
            out[c].push(node);
        }
        out
    }

    pub fn check_graph(&self, g: &DataGraph) -> Result<()> {
        if self.node_count() != g.node_count() {
            return Err(GraphError::DimensionMismatch {
                expected: g.node_count(),
                found: self.node_count(),
            });
        }
        Ok(())
    }

    /// True when both partitions group nodes identically (labels may differ).
    pub fn same_grouping(&self, other: &Partition) -> bool {
        if self.node_count() != other.node_count() || self.cluster_count != other.cluster_count {
            return false;
        }
        let mut map = vec![usize::MAX; self.cluster_count];
        for (&a, &b) in self.cluster_of.iter().zip(&other.cluster_of) {
            if map[a] == usize::MAX {
                map[a] = b;
            } else if map[a] != b {
                return false;
            }
        }
        true
    }
}

/// Sampling set with the observed values and, for synthetic data, the true
/// noise that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    nodes: Vec<usize>,
    values: Vec<f64>,
    noise: Option<Vec<f64>>,
}

impl Observation {
    /// `samples` are `(node, y)` pairs; `noise`, when given, is aligned with
    /// `samples`.
    pub fn new(n: usize, samples: Vec<(usize, f64)>, noise: Option<Vec<f64>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for (k, &(node, y)) in samples.iter().enumerate() {
            if node >= n {
                return Err(GraphError::NodeOutOfRange { node, n });
            }
            if seen[node] {
                return Err(GraphError::DuplicateSample(node));
            }
            seen[node] = true;
            if !y.is_finite() {
                return Err(GraphError::NonFinite(k));
            }
        }
        if let Some(e) = &noise {
            if e.len() != samples.len() {
                return Err(GraphError::DimensionMismatch { expected: samples.len(), found: e.len() });
            }
            if let Some(k) = e.iter().position(|v| !v.is_finite()) {
                return Err(GraphError::NonFinite(k));
            }
        }
        let (nodes, values) = samples.into_iter().unzip();
        Ok(Self { nodes, values, noise })
    }

    /// Observes `truth` at `nodes` with additive `noise` (aligned with
    /// `nodes`), so that `y[i] = x[i] + e[i]`.
    pub fn from_signal(truth: &GraphSignal, nodes: &[usize], noise: Option<&[f64]>) -> Result<Self> {
        let samples = nodes
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                if i >= truth.len() {
                    return Err(GraphError::NodeOutOfRange { node: i, n: truth.len() });
                }
                Ok((i, truth[i] + noise.map_or(0.0, |e| e[k])))
            })
            .collect::<Result<Vec<_>>>()?;
        let noise = Some(noise.map_or_else(|| vec![0.0; nodes.len()], <[f64]>::to_vec));
        Self::new(truth.len(), samples, noise)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn noise(&self) -> Option<&[f64]> {
        self.noise.as_deref()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes.iter().copied().zip(self.values.iter().copied())
    }

    /// Per-node sampled value, `None` off the sampling set.
    pub fn dense(&self, n: usize) -> Vec<Option<f64>> {
        let mut out = vec![None; n];
        for (i, y) in self.samples() {
            out[i] = Some(y);
        }
        out
    }

    /// Sum of absolute noise over the sampling set, if the noise is known.
    pub fn noise_l1(&self) -> Option<f64> {
        self.noise.as_ref().map(|e| e.iter().map(|v| v.abs()).sum())
    }

    /// Checks `y[i] - e[i] == x[i]` at every sample.
    pub fn consistent_with(&self, truth: &GraphSignal, tol: f64) -> bool {
        match &self.noise {
            None => false,
            Some(e) => self
                .samples()
                .zip(e)
                .all(|((i, y), e)| i < truth.len() && (y - e - truth[i]).abs() <= tol),
        }
    }
}

/// `sum_{ {i,j} in E } W_ij |x[j] - x[i]|`.
pub fn total_variation(g: &DataGraph, x: &GraphSignal) -> Result<f64> {
    g.check_signal(x)?;
    Ok(g.edges().iter().map(|e| e.weight * (x[e.j] - x[e.i]).abs()).sum())
}

/// Total variation restricted to the edges `s`.
pub fn tv_restricted(g: &DataGraph, x: &GraphSignal, s: &[EdgeId]) -> Result<f64> {
    g.check_signal(x)?;
    let mut total = 0.0;
    for &id in s {
        let e = g.edges().get(id).ok_or(GraphError::UnknownEdge(id))?;
        total += e.weight * (x[e.j] - x[e.i]).abs();
    }
    Ok(total)
}

/// Edges whose endpoints lie in different clusters, ascending.
pub fn boundary_edges(g: &DataGraph, p: &Partition) -> Result<Vec<EdgeId>> {
    p.check_graph(g)?;
    Ok(g.edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| p.cluster_of(e.i) != p.cluster_of(e.j))
        .map(|(id, _)| id)
        .collect())
}

/// Complement of `s` in the edge set, ascending. `s` must be ascending.
pub fn complement_edges(g: &DataGraph, s: &[EdgeId]) -> Vec<EdgeId> {
    let mut out = Vec::with_capacity(g.edge_count().saturating_sub(s.len()));
    let mut it = s.iter().peekable();
    for id in 0..g.edge_count() {
        if it.peek() == Some(&&id) {
            it.next();
        } else {
            out.push(id);
        }
    }
    out
}

/// Piecewise-constant signal `x[i] = a_{cluster(i)}`.
pub fn clustered_signal(p: &Partition, coeffs: &[f64]) -> Result<GraphSignal> {
    if coeffs.len() != p.cluster_count() {
        return Err(GraphError::DimensionMismatch { expected: p.cluster_count(), found: coeffs.len() });
    }
    GraphSignal::new(p.labels().iter().map(|&c| coeffs[c]).collect())
}

/// `2 max_l |a_l| sum_{boundary} W_ij`, an upper bound on the total
/// variation of the clustered signal with coefficients `coeffs`.
pub fn tv_upper_bound(p: &Partition, coeffs: &[f64], g: &DataGraph) -> Result<f64> {
    if coeffs.len() != p.cluster_count() {
        return Err(GraphError::DimensionMismatch { expected: p.cluster_count(), found: coeffs.len() });
    }
    let amax = coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let boundary_weight: f64 = boundary_edges(g, p)?.into_iter().map(|id| g.edge(id).weight).sum();
    Ok(2.0 * amax * boundary_weight)
}

/// `sum_{i in M} |x[i] - y[i]|`.
pub fn empirical_error(obs: &Observation, x: &GraphSignal) -> Result<f64> {
    let mut total = 0.0;
    for (i, y) in obs.samples() {
        if i >= x.len() {
            return Err(GraphError::NodeOutOfRange { node: i, n: x.len() });
        }
        total += (x[i] - y).abs();
    }
    Ok(total)
}

/// `sum_i (x_hat[i] - x[i])^2 / sum_i x[i]^2`.
pub fn nmse(x_hat: &GraphSignal, x_true: &GraphSignal) -> Result<f64> {
    if x_hat.len() != x_true.len() {
        return Err(GraphError::DimensionMismatch { expected: x_true.len(), found: x_hat.len() });
    }
    let denom: f64 = x_true.values().iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return Err(GraphError::ZeroSignal);
    }
    let num: f64 = x_hat.values().iter().zip(x_true.values()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(num / denom)
}
