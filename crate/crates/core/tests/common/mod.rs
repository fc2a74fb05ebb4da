#![allow(dead_code)]

use netlasso::bench::{sample_boundary_guided, GuidedMode};
use netlasso::graph::{boundary_edges, DataGraph, Partition};
use netlasso::simplex::{LinearProgram, LpError, Relation};
use rand::seq::SliceRandom;
use rand::Rng;

/// Direct LP feasibility of one boundary pattern over the variables
/// `h(i, j)`, `h(j, i)` with per-node conservation.
pub fn flow_lp_feasible(g: &DataGraph, p: &Partition, sampled: &[usize], k: f64, l: f64, pattern: &[bool]) -> bool {
    let boundary = boundary_edges(g, p).unwrap();
    assert_eq!(boundary.len(), pattern.len());
    let mut bit = vec![None; g.edge_count()];
    for (&id, &b) in boundary.iter().zip(pattern) {
        bit[id] = Some(b);
    }
    let mut lp = LinearProgram::new();
    let mut inflow: Vec<Vec<(usize, f64)>> = vec![Vec::new(); g.node_count()];
    for (id, e) in g.edges().iter().enumerate() {
        let fwd = lp.add_var(0.0, false);
        let bwd = lp.add_var(0.0, false);
        match bit[id] {
            Some(b) => {
                let lw = l * e.weight;
                lp.add_constraint(vec![(fwd, 1.0)], Relation::Eq, if b { lw } else { 0.0 });
                lp.add_constraint(vec![(bwd, 1.0)], Relation::Eq, if b { 0.0 } else { lw });
            }
            None => {
                lp.add_constraint(vec![(fwd, 1.0)], Relation::Le, e.weight);
                lp.add_constraint(vec![(bwd, 1.0)], Relation::Le, e.weight);
            }
        }
        inflow[e.j].push((fwd, 1.0));
        inflow[e.j].push((bwd, -1.0));
        inflow[e.i].push((fwd, -1.0));
        inflow[e.i].push((bwd, 1.0));
    }
    for (node, terms) in inflow.into_iter().enumerate() {
        if terms.is_empty() {
            continue;
        }
        if sampled.contains(&node) {
            lp.add_constraint(terms.clone(), Relation::Le, k);
            lp.add_constraint(terms, Relation::Ge, -k);
        } else {
            lp.add_constraint(terms, Relation::Eq, 0.0);
        }
    }
    match lp.solve() {
        Ok(_) => true,
        Err(LpError::Infeasible) => false,
        Err(e) => panic!("feasibility LP failed: {e}"),
    }
}

/// Random connected clustered graph: each cluster is a random tree plus
/// extra chords with weights in `intra`, clusters are chained by one
/// boundary edge and receive further random boundary edges, all with
/// weights in `inter`.
pub struct ClusteredInstance {
    pub graph: DataGraph,
    pub partition: Partition,
}

pub struct InstanceShape {
    pub clusters: (usize, usize),
    pub cluster_size: (usize, usize),
    pub extra_intra: usize,
    pub max_boundary: usize,
    pub intra: (f64, f64),
    pub inter: (f64, f64),
}

pub fn random_clustered(rng: &mut impl Rng, shape: &InstanceShape) -> ClusteredInstance {
    let c = rng.random_range(shape.clusters.0..=shape.clusters.1);
    let sizes: Vec<usize> = (0..c).map(|_| rng.random_range(shape.cluster_size.0..=shape.cluster_size.1)).collect();
    let mut labels = Vec::new();
    let mut start = Vec::new();
    for (k, &s) in sizes.iter().enumerate() {
        start.push(labels.len());
        labels.extend(std::iter::repeat_n(k, s));
    }
    let n = labels.len();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let has = |a: usize, b: usize, edges: &Vec<(usize, usize, f64)>| {
        edges.iter().any(|&(x, y, _)| (x, y) == (a.min(b), a.max(b)))
    };
    for (k, &s) in sizes.iter().enumerate() {
        let lo = start[k];
        for v in 1..s {
            let u = rng.random_range(0..v);
            edges.push((lo + u, lo + v, rng.random_range(shape.intra.0..shape.intra.1)));
        }
        for _ in 0..shape.extra_intra {
            if s < 3 {
                break;
            }
            let (a, b) = (lo + rng.random_range(0..s), lo + rng.random_range(0..s));
            if a != b && !has(a, b, &edges) {
                edges.push((a.min(b), a.max(b), rng.random_range(shape.intra.0..shape.intra.1)));
            }
        }
    }
    let mut boundary = 0;
    for k in 1..c {
        if boundary >= shape.max_boundary {
            break;
        }
        let a = start[k - 1] + rng.random_range(0..sizes[k - 1]);
        let b = start[k] + rng.random_range(0..sizes[k]);
        edges.push((a, b, rng.random_range(shape.inter.0..shape.inter.1)));
        boundary += 1;
    }
    let target = rng.random_range(boundary..=shape.max_boundary.max(boundary));
    let mut tries = 0;
    while boundary < target && tries < 100 {
        tries += 1;
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if labels[a] != labels[b] && !has(a, b, &edges) {
            edges.push((a.min(b), a.max(b), rng.random_range(shape.inter.0..shape.inter.1)));
            boundary += 1;
        }
    }
    ClusteredInstance { graph: DataGraph::new(n, edges).unwrap(), partition: Partition::new(labels).unwrap() }
}

/// Boundary-guided samples plus up to `extra` random nodes.
pub fn guided_samples(rng: &mut impl Rng, inst: &ClusteredInstance, l: f64, extra: usize) -> Vec<usize> {
    let n = inst.graph.node_count();
    let budget = guided_core_size(inst, l);
    let core = sample_boundary_guided(&inst.graph, &inst.partition, budget, GuidedMode::Lemma1 { l }, rng.random()).unwrap();
    let mut nodes = core.nodes;
    let mut rest: Vec<usize> = (0..n).filter(|v| !nodes.contains(v)).collect();
    rest.shuffle(rng);
    let take = rng.random_range(0..=extra.min(rest.len()));
    nodes.extend(rest.into_iter().take(take));
    nodes.sort_unstable();
    nodes
}

/// Number of nodes the boundary-guided pass selects before any top-up.
fn guided_core_size(inst: &ClusteredInstance, l: f64) -> usize {
    (1..=inst.graph.node_count())
        .find(|&b| {
            let s = sample_boundary_guided(&inst.graph, &inst.partition, b, GuidedMode::Lemma1 { l }, 0).unwrap();
            !s.partial_coverage
        })
        .unwrap_or(inst.graph.node_count())
}
