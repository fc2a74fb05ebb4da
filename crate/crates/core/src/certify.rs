//! Resolving-sampling-set certificates.
//!
//! A sampling set resolves a partition with constants `(K, L)` when, for
//! every orientation pattern of the boundary edges, there is a flow that
//! carries `L * W_ij` across each boundary edge in the chosen direction,
//! respects `W_ij` capacities on intra-cluster arcs, and has net demand at
//! most `K` in magnitude at sampled nodes and zero elsewhere.
//!
//! A single pattern is decided by one max-flow. Boundary flows are fixed,
//! so they become required injections/extractions at their endpoints,
//! routed from a super-source `S*` and into a super-sink `T*`. Sampled
//! nodes exchange up to `K` in either direction with a hub node that
//! absorbs the net imbalance of the region. The pattern is feasible iff the
//! max flow saturates every required arc.
//!
//! Intra-cluster arcs never cross clusters, so a pattern is feasible iff
//! each cluster's subproblem (with only its own incident boundary edges) is
//! feasible. [`resolves`] uses this to certify graphs whose total boundary
//! is too large to enumerate globally.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::flow::MaxFlow;
use crate::graph::{boundary_edges, complement_edges, tv_restricted, DataGraph, EdgeId, GraphError, GraphSignal, Partition};

/// Most boundary edges for which all `2^|boundary|` patterns are enumerated.
pub const MAX_PATTERN_EDGES: usize = 20;
/// Witness flows are kept in certificates up to this many boundary edges.
pub const MAX_WITNESS_EDGES: usize = 12;
/// Relative slack on the saturation test.
pub const FEASIBILITY_SLACK: f64 = 1e-9;
/// Bisection tolerance of [`min_feasible_k`].
pub const K_SEARCH_TOL: f64 = 1e-3;
/// Largest `K` considered by [`min_feasible_k`].
pub const K_SEARCH_MAX: f64 = 1e6;
/// Slack accepted by [`compatibility_holds`].
pub const COMPATIBILITY_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("K must be positive, got {0}")]
    InvalidK(f64),
    #[error("L must be positive, got {0}")]
    InvalidL(f64),
    #[error("pattern has {found} bits but the boundary has {expected} edges")]
    PatternLength { expected: usize, found: usize },
    #[error("{size} boundary edges exceed the exhaustive limit of {limit}")]
    BoundaryTooLarge { size: usize, limit: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, CertifyError>;

/// Per-edge directed flow values `h(i, j)` and `h(j, i)` (with `i < j` the
/// stored orientation), both nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowAssignment {
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
}

impl FlowAssignment {
    pub fn zero(edges: usize) -> Self {
        Self { forward: vec![0.0; edges], backward: vec![0.0; edges] }
    }

    /// Net demand `d[i] = sum_j h(j, i) - h(i, j)` per node.
    pub fn demands(&self, g: &DataGraph) -> Vec<f64> {
        let mut d = vec![0.0; g.node_count()];
        for (id, e) in g.edges().iter().enumerate() {
            let net = self.forward[id] - self.backward[id];
            d[e.j] += net;
            d[e.i] -= net;
        }
        d
    }

    /// Checks capacity, boundary, complementarity and demand constraints
    /// for `pattern` with absolute tolerance `tol`.
    #[allow(clippy::too_many_arguments)]
    pub fn satisfies(
        &self,
        g: &DataGraph,
        p: &Partition,
        sampled: &[usize],
        k: f64,
        l: f64,
        pattern: &[bool],
        tol: f64,
    ) -> bool {
        let boundary = match boundary_edges(g, p) {
            Ok(b) => b,
            Err(_) => return false,
        };
        if pattern.len() != boundary.len() || self.forward.len() != g.edge_count() {
            return false;
        }
        let mut bit = vec![None; g.edge_count()];
        for (&id, &b) in boundary.iter().zip(pattern) {
            bit[id] = Some(b);
        }
        for (id, e) in g.edges().iter().enumerate() {
            let (f, r) = (self.forward[id], self.backward[id]);
            if f < -tol || r < -tol {
                return false;
            }
            match bit[id] {
                Some(b) => {
                    let lw = l * e.weight;
                    let (ef, er) = if b { (lw, 0.0) } else { (0.0, lw) };
                    if (f - ef).abs() > tol || (r - er).abs() > tol {
                        return false;
                    }
                }
                None => {
                    if f > e.weight + tol || r > e.weight + tol {
                        return false;
                    }
                }
            }
        }
        let mask = sample_mask(g.node_count(), sampled);
        self.demands(g)
            .iter()
            .zip(&mask)
            .all(|(&d, &s)| if s { d.abs() <= k + tol } else { d.abs() <= tol })
    }
}

fn sample_mask(n: usize, sampled: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &i in sampled {
        if i < n {
            mask[i] = true;
        }
    }
    mask
}

fn check_inputs(g: &DataGraph, p: &Partition, sampled: &[usize], k: f64, l: f64) -> Result<()> {
    if !(k > 0.0) {
        return Err(CertifyError::InvalidK(k));
    }
    if !(l > 0.0) {
        return Err(CertifyError::InvalidL(l));
    }
    p.check_graph(g)?;
    if let Some(&bad) = sampled.iter().find(|&&i| i >= g.node_count()) {
        return Err(GraphError::NodeOutOfRange { node: bad, n: g.node_count() }.into());
    }
    Ok(())
}

/// One flow subproblem over a set of nodes: free arcs on `intra` edges and
/// fixed boundary flows on `fixed` edges (with their direction bits).
struct Region<'a> {
    g: &'a DataGraph,
    nodes: &'a [usize],
    intra: &'a [EdgeId],
    sampled: &'a [bool],
}

impl Region<'_> {
    /// Returns the intra-edge flows `(edge, forward, backward)` if feasible.
    fn solve(&self, fixed: &[(EdgeId, bool)], k: f64, l: f64) -> Option<Vec<(EdgeId, f64, f64)>> {
        let g = self.g;
        let mut local = std::collections::HashMap::with_capacity(self.nodes.len());
        for (idx, &v) in self.nodes.iter().enumerate() {
            local.insert(v, idx);
        }
        let n = self.nodes.len();
        let (hub, src, sink) = (n, n + 1, n + 2);
        let mut excess = vec![0.0; n];
        for &(id, b) in fixed {
            let e = g.edge(id);
            let amount = l * e.weight;
            let (from, to) = if b { (e.i, e.j) } else { (e.j, e.i) };
            if let Some(&u) = local.get(&from) {
                excess[u] -= amount;
            }
            if let Some(&v) = local.get(&to) {
                excess[v] += amount;
            }
        }
        let mut mf = MaxFlow::new(n + 3);
        let mut required = 0.0;
        let mut net = 0.0;
        for (idx, &ex) in excess.iter().enumerate() {
            net += ex;
            if ex > 0.0 {
                mf.add_arc(src, idx, ex);
                required += ex;
            } else if ex < 0.0 {
                mf.add_arc(idx, sink, -ex);
            }
        }
        // the hub absorbs the region's net boundary inflow through sampled nodes
        if net > 0.0 {
            mf.add_arc(hub, sink, net);
        } else if net < 0.0 {
            mf.add_arc(src, hub, -net);
            required += -net;
        }
        if required <= 0.0 {
            return Some(Vec::new());
        }
        for (idx, &v) in self.nodes.iter().enumerate() {
            if self.sampled[v] {
                mf.add_arc(idx, hub, k);
                mf.add_arc(hub, idx, k);
            }
        }
        let mut handles = Vec::with_capacity(self.intra.len());
        for &id in self.intra {
            let e = g.edge(id);
            let (a, b) = (local[&e.i], local[&e.j]);
            let fwd = mf.add_arc(a, b, e.weight);
            let bwd = mf.add_arc(b, a, e.weight);
            handles.push((id, fwd, bwd));
        }
        let value = mf.run(src, sink);
        if value < required - FEASIBILITY_SLACK * required.max(1.0) {
            return None;
        }
        Some(
            handles
                .into_iter()
                .map(|(id, fwd, bwd)| {
                    let net = mf.flow_on(fwd) - mf.flow_on(bwd);
                    (id, net.max(0.0), (-net).max(0.0))
                })
                .collect(),
        )
    }
}

fn assemble(g: &DataGraph, boundary: &[EdgeId], pattern: &[bool], l: f64, intra: Vec<(EdgeId, f64, f64)>) -> FlowAssignment {
    let mut flow = FlowAssignment::zero(g.edge_count());
    for (id, f, r) in intra {
        flow.forward[id] = f;
        flow.backward[id] = r;
    }
    for (&id, &b) in boundary.iter().zip(pattern) {
        let lw = l * g.edge(id).weight;
        if b {
            flow.forward[id] = lw;
        } else {
            flow.backward[id] = lw;
        }
    }
    flow
}

/// Bits of pattern number `code` over `k` edges, most significant first, so
/// that numeric order is lexicographic order.
fn pattern_bits(code: u64, k: usize) -> Vec<bool> {
    (0..k).map(|t| (code >> (k - 1 - t)) & 1 == 1).collect()
}

/// Decides one boundary orientation pattern. `pattern[t]` is the bit of the
/// `t`-th boundary edge (ascending edge order); `true` sends `L * W` from the
/// lower-numbered endpoint to the higher one.
pub fn check_pattern(
    g: &DataGraph,
    p: &Partition,
    sampled: &[usize],
    k: f64,
    l: f64,
    pattern: &[bool],
) -> Result<Option<FlowAssignment>> {
    check_inputs(g, p, sampled, k, l)?;
    let boundary = boundary_edges(g, p)?;
    if pattern.len() != boundary.len() {
        return Err(CertifyError::PatternLength { expected: boundary.len(), found: pattern.len() });
    }
    let mask = sample_mask(g.node_count(), sampled);
    let nodes: Vec<usize> = (0..g.node_count()).collect();
    let intra = complement_edges(g, &boundary);
    let region = Region { g, nodes: &nodes, intra: &intra, sampled: &mask };
    let fixed: Vec<(EdgeId, bool)> = boundary.iter().copied().zip(pattern.iter().copied()).collect();
    Ok(region.solve(&fixed, k, l).map(|flows| assemble(g, &boundary, pattern, l, flows)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternWitness {
    pub pattern: Vec<bool>,
    pub flow: FlowAssignment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Resolved,
    /// Lexicographically smallest infeasible pattern.
    NotResolved { failing_pattern: Vec<bool> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// All `2^|boundary|` patterns checked on the whole graph.
    Exhaustive,
    /// Patterns enumerated per cluster over its incident boundary edges.
    PerCluster,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvingCertificate {
    pub k: f64,
    pub l: f64,
    pub boundary: Vec<EdgeId>,
    pub verdict: Verdict,
    pub mode: CheckMode,
    /// One witness per pattern in lexicographic order; present only for
    /// resolved exhaustive checks with at most [`MAX_WITNESS_EDGES`] edges.
    pub witnesses: Option<Vec<PatternWitness>>,
}

impl ResolvingCertificate {
    pub fn is_resolved(&self) -> bool {
        self.verdict == Verdict::Resolved
    }
}

/// Cluster subproblems: member nodes, intra edges and incident boundary
/// edges (as positions into the global boundary list).
struct ClusterSplit {
    members: Vec<Vec<usize>>,
    intra: Vec<Vec<EdgeId>>,
    incident: Vec<Vec<usize>>,
}

impl ClusterSplit {
    fn new(g: &DataGraph, p: &Partition, boundary: &[EdgeId]) -> Self {
        let c = p.cluster_count();
        let mut intra = vec![Vec::new(); c];
        for (id, e) in g.edges().iter().enumerate() {
            if p.cluster_of(e.i) == p.cluster_of(e.j) {
                intra[p.cluster_of(e.i)].push(id);
            }
        }
        let mut incident = vec![Vec::new(); c];
        for (pos, &id) in boundary.iter().enumerate() {
            let e = g.edge(id);
            incident[p.cluster_of(e.i)].push(pos);
            incident[p.cluster_of(e.j)].push(pos);
        }
        Self { members: p.members(), intra, incident }
    }

    fn widest(&self) -> usize {
        self.incident.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Smallest infeasible local pattern of cluster `c` at `(k, l)`.
    fn first_failure(&self, g: &DataGraph, mask: &[bool], boundary: &[EdgeId], c: usize, k: f64, l: f64) -> Option<Vec<bool>> {
        let inc = &self.incident[c];
        if inc.is_empty() {
            return None;
        }
        let region = Region { g, nodes: &self.members[c], intra: &self.intra[c], sampled: mask };
        (0..1u64 << inc.len()).find_map(|code| {
            let bits = pattern_bits(code, inc.len());
            let fixed: Vec<(EdgeId, bool)> = inc.iter().map(|&pos| boundary[pos]).zip(bits.iter().copied()).collect();
            region.solve(&fixed, k, l).is_none().then_some(bits)
        })
    }
}

/// Exhaustive resolvability check over all boundary orientation patterns.
///
/// Boundaries up to [`MAX_PATTERN_EDGES`] edges are enumerated on the whole
/// graph. Larger boundaries fall back to exact per-cluster enumeration,
/// which requires every cluster to touch at most [`MAX_PATTERN_EDGES`]
/// boundary edges.
pub fn resolves(g: &DataGraph, p: &Partition, sampled: &[usize], k: f64, l: f64) -> Result<ResolvingCertificate> {
    check_inputs(g, p, sampled, k, l)?;
    let boundary = boundary_edges(g, p)?;
    let b = boundary.len();
    if b <= MAX_PATTERN_EDGES {
        let mask = sample_mask(g.node_count(), sampled);
        let nodes: Vec<usize> = (0..g.node_count()).collect();
        let intra = complement_edges(g, &boundary);
        let region = Region { g, nodes: &nodes, intra: &intra, sampled: &mask };
        let run = |code: u64| {
            let bits = pattern_bits(code, b);
            let fixed: Vec<(EdgeId, bool)> = boundary.iter().copied().zip(bits.iter().copied()).collect();
            region.solve(&fixed, k, l).map(|f| (bits, f))
        };
        let count = 1u64 << b;
        let (verdict, witnesses) = if b <= MAX_WITNESS_EDGES {
            let all: Vec<_> = (0..count).into_par_iter().map(run).collect();
            match all.iter().position(Option::is_none) {
                Some(code) => (Verdict::NotResolved { failing_pattern: pattern_bits(code as u64, b) }, None),
                None => {
                    let w = all
                        .into_iter()
                        .flatten()
                        .map(|(bits, f)| {
                            let flow = assemble(g, &boundary, &bits, l, f);
                            PatternWitness { pattern: bits, flow }
                        })
                        .collect();
                    (Verdict::Resolved, Some(w))
                }
            }
        } else {
            match (0..count).into_par_iter().find_first(|&code| run(code).is_none()) {
                Some(code) => (Verdict::NotResolved { failing_pattern: pattern_bits(code, b) }, None),
                None => (Verdict::Resolved, None),
            }
        };
        return Ok(ResolvingCertificate { k, l, boundary, verdict, mode: CheckMode::Exhaustive, witnesses });
    }

    let split = ClusterSplit::new(g, p, &boundary);
    let widest = split.widest();
    if widest > MAX_PATTERN_EDGES {
        return Err(CertifyError::BoundaryTooLarge { size: widest, limit: MAX_PATTERN_EDGES });
    }
    let mask = sample_mask(g.node_count(), sampled);
    let failures: Vec<Vec<bool>> = (0..p.cluster_count())
        .into_par_iter()
        .filter_map(|c| {
            split.first_failure(g, &mask, &boundary, c, k, l).map(|local| {
                let mut global = vec![false; b];
                for (&pos, bit) in split.incident[c].iter().zip(local) {
                    global[pos] = bit;
                }
                global
            })
        })
        .collect();
    let verdict = match failures.into_iter().min() {
        Some(failing_pattern) => Verdict::NotResolved { failing_pattern },
        None => Verdict::Resolved,
    };
    Ok(ResolvingCertificate { k, l, boundary, verdict, mode: CheckMode::PerCluster, witnesses: None })
}

/// Smallest `K` (to within [`K_SEARCH_TOL`], rounded up) for which `sampled`
/// resolves `p` with constant `l`; `f64::INFINITY` if even
/// [`K_SEARCH_MAX`] fails, and `0.0` when the boundary is empty.
pub fn min_feasible_k(g: &DataGraph, p: &Partition, sampled: &[usize], l: f64) -> Result<f64> {
    check_inputs(g, p, sampled, 1.0, l)?;
    let boundary = boundary_edges(g, p)?;
    let split = ClusterSplit::new(g, p, &boundary);
    let widest = split.widest();
    if widest > MAX_PATTERN_EDGES {
        return Err(CertifyError::BoundaryTooLarge { size: widest, limit: MAX_PATTERN_EDGES });
    }
    let mask = sample_mask(g.node_count(), sampled);
    let per_cluster: Vec<f64> = (0..p.cluster_count())
        .into_par_iter()
        .map(|c| {
            if split.incident[c].is_empty() {
                return 0.0;
            }
            let ok = |k: f64| split.first_failure(g, &mask, &boundary, c, k, l).is_none();
            let through: f64 = split.incident[c].iter().map(|&pos| l * g.edge(boundary[pos]).weight).sum();
            let mut hi = if ok(through) {
                through
            } else if ok(K_SEARCH_MAX) {
                K_SEARCH_MAX
            } else {
                return f64::INFINITY;
            };
            let mut lo = 0.0;
            while hi - lo > K_SEARCH_TOL {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        })
        .collect();
    Ok(per_cluster.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SufficientCondition {
    /// Every boundary endpoint has a serving sampled node; `k` is the
    /// resulting demand bound.
    Applicable { k: f64, servers: Vec<BoundaryServers> },
    NotApplicable { reason: Inapplicable },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryServers {
    pub edge: EdgeId,
    /// Sampled node feeding endpoint `i` (may be `i` itself).
    pub server_i: usize,
    pub server_j: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Inapplicable {
    /// Partition has no boundary; resolvability is vacuous.
    EmptyBoundary,
    /// Endpoint `node` of boundary edge `edge` has no sampled neighbor in
    /// its own cluster with weight at least `L * W`.
    Uncovered { edge: EdgeId, node: usize },
    /// The edge `{server, node}` cannot carry the combined boundary flow of
    /// all boundary edges at `node` that it serves.
    Overloaded { server: usize, node: usize, load: f64, capacity: f64 },
}

/// Sufficient local condition for resolvability: each endpoint `i` of a
/// boundary edge `{i, j}` is either sampled or adjacent to a sampled node
/// `m` of its own cluster with `W_mi >= L * W_ij`.
///
/// One server is chosen per endpoint (the endpoint itself if sampled, else
/// the heaviest qualifying neighbor, ties to the smaller id). Routing each
/// boundary flow over its two servers gives a flow for every pattern as
/// long as each server edge can carry the sum over the boundary edges it
/// serves at that endpoint; the returned `K` is `L` times the largest
/// total boundary weight served by one sampled node.
pub fn lemma1_constants(g: &DataGraph, p: &Partition, sampled: &[usize], l: f64) -> Result<SufficientCondition> {
    check_inputs(g, p, sampled, 1.0, l)?;
    let boundary = boundary_edges(g, p)?;
    if boundary.is_empty() {
        return Ok(SufficientCondition::NotApplicable { reason: Inapplicable::EmptyBoundary });
    }
    let mask = sample_mask(g.node_count(), sampled);
    let pick = |edge: EdgeId, node: usize| -> Option<usize> {
        if mask[node] {
            return Some(node);
        }
        let need = l * g.edge(edge).weight;
        let mut best: Option<(usize, f64)> = None;
        for &(m, e) in g.neighbors(node) {
            let w = g.edge(e).weight;
            if mask[m] && p.cluster_of(m) == p.cluster_of(node) && w >= need
                && best.is_none_or(|(_, bw)| w > bw) {
                    best = Some((m, w));
                }
        }
        best.map(|(m, _)| m)
    };
    let mut servers = Vec::with_capacity(boundary.len());
    let mut served = vec![0.0; g.node_count()];
    let mut load: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
    for &id in &boundary {
        let e = *g.edge(id);
        let mut chosen = [0usize; 2];
        for (slot, node) in [e.i, e.j].into_iter().enumerate() {
            let Some(m) = pick(id, node) else {
                return Ok(SufficientCondition::NotApplicable { reason: Inapplicable::Uncovered { edge: id, node } });
            };
            served[m] += e.weight;
            if m != node {
                *load.entry((m, node)).or_default() += l * e.weight;
            }
            chosen[slot] = m;
        }
        servers.push(BoundaryServers { edge: id, server_i: chosen[0], server_j: chosen[1] });
    }
    for (&(server, node), &need) in &load {
        let capacity = g.weight(server, node).unwrap_or(0.0);
        if need > capacity * (1.0 + 1e-12) {
            return Ok(SufficientCondition::NotApplicable {
                reason: Inapplicable::Overloaded { server, node, load: need, capacity },
            });
        }
    }
    let k = l * served.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(SufficientCondition::Applicable { k, servers })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Compatibility {
    pub holds: bool,
    /// `K sum_M |z| + ||z||_{E \ boundary} - L ||z||_{boundary}`.
    pub slack: f64,
}

/// Evaluates the network compatibility inequality for the single signal
/// `z`.
pub fn compatibility_holds(
    g: &DataGraph,
    p: &Partition,
    sampled: &[usize],
    k: f64,
    l: f64,
    z: &GraphSignal,
) -> Result<Compatibility> {
    p.check_graph(g)?;
    let boundary = boundary_edges(g, p)?;
    let inner = complement_edges(g, &boundary);
    let mut on_samples = 0.0;
    for &i in sampled {
        if i >= z.len() {
            return Err(GraphError::NodeOutOfRange { node: i, n: z.len() }.into());
        }
        on_samples += z[i].abs();
    }
    let lhs = k * on_samples + tv_restricted(g, z, &inner)?;
    let rhs = l * tv_restricted(g, z, &boundary)?;
    let slack = lhs - rhs;
    Ok(Compatibility { holds: slack >= -COMPATIBILITY_SLACK, slack })
}
