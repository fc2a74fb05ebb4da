//! Sampling-set constructors.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BenchError, Result};
use crate::graph::{boundary_edges, DataGraph, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GuidedMode {
    /// Serve each boundary endpoint by its heaviest sampled same-cluster
    /// neighbor with weight at least `l * W_ij`, or by the endpoint itself.
    Lemma1 { l: f64 },
    /// Scan edges by ascending weight and add the highest-degree neighbor of
    /// both endpoints.
    EdgeSorted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSet {
    /// Ascending node ids.
    pub nodes: Vec<usize>,
    /// The budget ran out before every boundary edge was handled.
    pub partial_coverage: bool,
}

struct Picker {
    chosen: Vec<bool>,
    order: Vec<usize>,
    budget: usize,
}

impl Picker {
    fn new(n: usize, budget: usize) -> Self {
        Self { chosen: vec![false; n], order: Vec::new(), budget }
    }

    fn full(&self) -> bool {
        self.order.len() >= self.budget
    }

    fn add(&mut self, v: usize) {
        if !self.chosen[v] && !self.full() {
            self.chosen[v] = true;
            self.order.push(v);
        }
    }

    /// Tops up to the budget with uniformly drawn unchosen nodes.
    fn fill(mut self, rng: &mut impl Rng) -> Vec<usize> {
        let rest: Vec<usize> = (0..self.chosen.len()).filter(|&v| !self.chosen[v]).collect();
        let need = self.budget.saturating_sub(self.order.len()).min(rest.len());
        for k in index::sample(rng, rest.len(), need) {
            self.add(rest[k]);
        }
        let mut nodes = self.order;
        nodes.sort_unstable();
        nodes
    }
}

/// Boundary-driven sampling with exactly `min(budget, N)` nodes; leftover
/// budget is spent uniformly at random.
pub fn sample_boundary_guided(g: &DataGraph, p: &Partition, budget: usize, mode: GuidedMode, seed: u64) -> Result<SampleSet> {
    p.check_graph(g)?;
    let n = g.node_count();
    let budget = budget.min(n);
    let boundary = boundary_edges(g, p)?;
    let mut picker = Picker::new(n, budget);
    let mut partial = false;
    match mode {
        GuidedMode::Lemma1 { l } => {
            if !(l > 0.0) {
                return Err(BenchError::InvalidSpec(format!("L = {l}")));
            }
            for &id in &boundary {
                let e = *g.edge(id);
                for node in [e.i, e.j] {
                    if picker.full() {
                        partial = true;
                        break;
                    }
                    let need = l * e.weight;
                    let served = picker.chosen[node]
                        || g.neighbors(node).iter().any(|&(m, f)| {
                            picker.chosen[m] && p.cluster_of(m) == p.cluster_of(node) && g.edge(f).weight >= need
                        });
                    if served {
                        continue;
                    }
                    let best = g
                        .neighbors(node)
                        .iter()
                        .filter(|&&(m, f)| p.cluster_of(m) == p.cluster_of(node) && g.edge(f).weight >= need)
                        .max_by(|a, b| g.edge(a.1).weight.total_cmp(&g.edge(b.1).weight).then(b.0.cmp(&a.0)))
                        .map(|&(m, _)| m);
                    picker.add(best.unwrap_or(node));
                }
            }
        }
        GuidedMode::EdgeSorted => {
            let mut order: Vec<usize> = (0..g.edge_count()).collect();
            order.sort_by(|&a, &b| g.edge(a).weight.total_cmp(&g.edge(b).weight).then(a.cmp(&b)));
            let mut handled = vec![false; g.edge_count()];
            for id in order {
                if picker.full() {
                    break;
                }
                let e = *g.edge(id);
                for node in [e.i, e.j] {
                    let hub = g
                        .neighbors(node)
                        .iter()
                        .map(|&(m, _)| m)
                        .max_by(|&a, &b| g.degree(a).cmp(&g.degree(b)).then(b.cmp(&a)));
                    if let Some(m) = hub {
                        picker.add(m);
                    }
                }
                handled[id] = true;
            }
            partial = boundary.iter().any(|&id| !handled[id]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(SampleSet { nodes: picker.fill(&mut rng), partial_coverage: partial })
}

/// `min(budget, n)` nodes drawn uniformly without replacement, ascending.
pub fn sample_uniform(n: usize, budget: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = index::sample(&mut rng, n, budget.min(n)).into_vec();
    nodes.sort_unstable();
    nodes
}
