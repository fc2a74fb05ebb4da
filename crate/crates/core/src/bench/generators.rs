//! Random clustered graphs.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{BenchError, Result};
use crate::graph::{DataGraph, Partition};

/// Edge weight law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightDist {
    Constant { value: f64 },
    /// `|N(mean, std^2)|`, redrawn on an exact zero.
    AbsNormal { mean: f64, std: f64 },
}

impl WeightDist {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            WeightDist::Constant { value } => value.is_finite() && value > 0.0,
            WeightDist::AbsNormal { mean, std } => mean.is_finite() && std.is_finite() && std >= 0.0 && (mean != 0.0 || std > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(BenchError::InvalidSpec(format!("weight distribution {self:?}")))
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            WeightDist::Constant { value } => value,
            WeightDist::AbsNormal { mean, std } => {
                let normal = Normal::new(mean, std).expect("validated parameters");
                loop {
                    let w = normal.sample(rng).abs();
                    if w > 0.0 {
                        return w;
                    }
                }
            }
        }
    }
}

/// Chain `0 - 1 - ... - (n-1)` cut into consecutive blocks of
/// `cluster_size` nodes.
pub fn generate_chain(
    n: usize,
    cluster_size: usize,
    intra: WeightDist,
    inter: WeightDist,
    seed: u64,
) -> Result<(DataGraph, Partition)> {
    if n == 0 || cluster_size == 0 || !n.is_multiple_of(cluster_size) {
        return Err(BenchError::InvalidSpec(format!("cluster size {cluster_size} does not divide {n}")));
    }
    intra.validate()?;
    inter.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<(usize, usize, f64)> = (0..n - 1)
        .map(|k| {
            let dist = if (k + 1) % cluster_size == 0 { &inter } else { &intra };
            (k, k + 1, dist.sample(&mut rng))
        })
        .collect();
    Ok((DataGraph::new(n, edges)?, Partition::consecutive(n, cluster_size)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedPartitionParams {
    pub n: usize,
    pub communities: usize,
    /// Exponent `tau` of the community-size law `P(s) ~ s^-tau`.
    pub size_exponent: f64,
    /// Ratio between the largest and smallest admissible community size.
    pub size_range: f64,
    pub avg_degree: f64,
    /// Exponent of the power law for node degree propensities.
    pub degree_exponent: f64,
    /// Fraction of each node's expected degree that leaves its community.
    pub mixing: f64,
    pub intra: WeightDist,
    pub inter: WeightDist,
}

impl Default for PlantedPartitionParams {
    fn default() -> Self {
        Self {
            n: 20_000,
            communities: 280,
            size_exponent: 2.0,
            size_range: 50.0,
            avg_degree: 18.9,
            degree_exponent: 2.5,
            mixing: 0.1,
            intra: WeightDist::AbsNormal { mean: 2.0, std: 0.5 },
            inter: WeightDist::AbsNormal { mean: 1.0, std: 0.5 },
        }
    }
}

const SIZE_RETRIES: usize = 100;
const MIN_COMMUNITY: usize = 2;

/// Draws from the continuous power law `s^-tau` on `[1, range]`.
fn power_law(rng: &mut impl Rng, tau: f64, range: f64) -> f64 {
    let u: f64 = rng.random();
    if (tau - 1.0).abs() < 1e-12 {
        return range.powf(u);
    }
    let a = 1.0 - tau;
    (1.0 + u * (range.powf(a) - 1.0)).powf(1.0 / a)
}

fn community_sizes(p: &PlantedPartitionParams, rng: &mut impl Rng) -> Result<Vec<usize>> {
    for _ in 0..SIZE_RETRIES {
        let raw: Vec<f64> = (0..p.communities).map(|_| power_law(rng, p.size_exponent, p.size_range)).collect();
        let scale = p.n as f64 / raw.iter().sum::<f64>();
        let mut sizes: Vec<usize> = raw.iter().map(|r| (r * scale).round() as usize).collect();
        let mut total: usize = sizes.iter().sum();
        // settle the rounding remainder on the largest communities
        let mut order: Vec<usize> = (0..sizes.len()).collect();
        order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
        let mut k = 0;
        while total != p.n {
            let c = order[k % order.len()];
            if total < p.n {
                sizes[c] += 1;
                total += 1;
            } else if sizes[c] > MIN_COMMUNITY {
                sizes[c] -= 1;
                total -= 1;
            }
            k += 1;
            if k > 4 * p.n {
                break;
            }
        }
        if total == p.n && sizes.iter().all(|&s| s >= MIN_COMMUNITY) {
            return Ok(sizes);
        }
    }
    Err(BenchError::InfeasibleSizes { n: p.n, communities: p.communities })
}

/// Samples an index with probability proportional to its weight from the
/// cumulative table `cum` (ascending, last entry the total).
fn pick(cum: &[f64], rng: &mut impl Rng) -> usize {
    let total = *cum.last().expect("non-empty table");
    let r = rng.random::<f64>() * total;
    cum.partition_point(|&c| c <= r).min(cum.len() - 1)
}

fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Planted partition with power-law community sizes and degree
/// propensities.
///
/// Each community receives `(1 - mixing) * avg_degree * size / 2` edges and
/// the graph `mixing * avg_degree * n / 2` cross edges, both drawn with
/// endpoint probabilities proportional to the node propensities. Spanning
/// edges are then added inside each community, and between communities if
/// necessary, until the graph is connected.
pub fn generate_planted_partition(params: &PlantedPartitionParams, seed: u64) -> Result<(DataGraph, Partition)> {
    let p = params;
    if p.communities < 2 || p.n < MIN_COMMUNITY * p.communities {
        return Err(BenchError::InvalidSpec(format!("{} communities over {} nodes", p.communities, p.n)));
    }
    if !(p.mixing > 0.0 && p.mixing < 1.0) {
        return Err(BenchError::InvalidSpec(format!("mixing {} outside (0, 1)", p.mixing)));
    }
    if !(p.avg_degree > 0.0 && p.size_range >= 1.0 && p.size_exponent > 0.0 && p.degree_exponent > 1.0) {
        return Err(BenchError::InvalidSpec("degree and size parameters must be positive".into()));
    }
    p.intra.validate()?;
    p.inter.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = community_sizes(p, &mut rng)?;
    let mut cluster_of = Vec::with_capacity(p.n);
    let mut start = Vec::with_capacity(sizes.len() + 1);
    for (c, &s) in sizes.iter().enumerate() {
        start.push(cluster_of.len());
        cluster_of.extend(std::iter::repeat_n(c, s));
    }
    start.push(p.n);
    let theta: Vec<f64> = (0..p.n).map(|_| power_law(&mut rng, p.degree_exponent, 100.0)).collect();

    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let add = |a: usize, b: usize, seen: &mut HashSet<(usize, usize)>| {
        let key = (a.min(b), a.max(b));
        a != b && seen.insert(key)
    };

    for (c, &s) in sizes.iter().enumerate() {
        let lo = start[c];
        let cum = cumulative(theta[lo..lo + s].iter().copied());
        let max_edges = s * (s - 1) / 2;
        let target = (((1.0 - p.mixing) * p.avg_degree * s as f64 / 2.0).round() as usize).min(max_edges);
        let mut placed = 0;
        let mut attempts = 0;
        while placed < target && attempts < 20 * target + 100 {
            attempts += 1;
            let (a, b) = (lo + pick(&cum, &mut rng), lo + pick(&cum, &mut rng));
            if add(a, b, &mut seen) {
                edges.push((a, b, p.intra.sample(&mut rng)));
                placed += 1;
            }
        }
    }
    let cum = cumulative(theta.iter().copied());
    let target = (p.mixing * p.avg_degree * p.n as f64 / 2.0).round() as usize;
    let (mut placed, mut attempts) = (0, 0);
    while placed < target && attempts < 20 * target + 100 {
        attempts += 1;
        let (a, b) = (pick(&cum, &mut rng), pick(&cum, &mut rng));
        if cluster_of[a] != cluster_of[b] && add(a, b, &mut seen) {
            edges.push((a, b, p.inter.sample(&mut rng)));
            placed += 1;
        }
    }

    // spanning repair inside communities, then across them
    let mut dsu = Dsu::new(p.n);
    for &(a, b, _) in &edges {
        if cluster_of[a] == cluster_of[b] {
            dsu.union(a, b);
        }
    }
    for (c, &s) in sizes.iter().enumerate() {
        let lo = start[c];
        for v in lo + 1..lo + s {
            if dsu.find(v) != dsu.find(lo) {
                let anchor = lo + rng.random_range(0..v - lo);
                let anchor = if dsu.find(anchor) == dsu.find(v) { lo } else { anchor };
                dsu.union(anchor, v);
                if add(anchor, v, &mut seen) {
                    edges.push((anchor, v, p.intra.sample(&mut rng)));
                }
            }
        }
    }
    for &(a, b, _) in &edges {
        dsu.union(a, b);
    }
    for c in 1..sizes.len() {
        let v = start[c];
        if dsu.find(v) != dsu.find(0) {
            let u = rng.random_range(0..start[c]);
            let u = if dsu.find(u) == dsu.find(v) { 0 } else { u };
            dsu.union(u, v);
            if add(u, v, &mut seen) {
                edges.push((u, v, p.inter.sample(&mut rng)));
            }
        }
    }
    Ok((DataGraph::new(p.n, edges)?, Partition::new(cluster_of)?))
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::boundary_edges;

    #[test]
    fn chain_shapes() {
        let one = WeightDist::Constant { value: 1.0 };
        let half = WeightDist::Constant { value: 0.5 };
        let (g, p) = generate_chain(10, 5, one, half, 0).unwrap();
        let (fg, fp) = super::super::fixtures::two_cluster_chain(10, 0.5);
        assert_eq!(g, fg);
        assert_eq!(p, fp);
        assert!(matches!(generate_chain(10, 3, one, half, 0), Err(BenchError::InvalidSpec(_))));

        let intra = WeightDist::AbsNormal { mean: 2.0, std: 0.5 };
        let inter = WeightDist::AbsNormal { mean: 1.0, std: 0.5 };
        let (g, p) = generate_chain(100_000, 10, intra, inter, 3).unwrap();
        assert_eq!(g.edge_count(), 99_999);
        assert_eq!(p.cluster_count(), 10_000);
        let again = generate_chain(100_000, 10, intra, inter, 3).unwrap();
        assert_eq!(g, again.0);
    }

    #[test]
    fn chain_weight_law() {
        let intra = WeightDist::AbsNormal { mean: 2.0, std: 0.5 };
        let inter = WeightDist::AbsNormal { mean: 1.0, std: 0.5 };
        let (g, p) = generate_chain(100_000, 10, intra, inter, 11).unwrap();
        let b: HashSet<usize> = boundary_edges(&g, &p).unwrap().into_iter().collect();
        let (mut si, mut ni, mut sb, mut nb) = (0.0, 0.0, 0.0, 0.0);
        for (id, e) in g.edges().iter().enumerate() {
            if b.contains(&id) {
                sb += e.weight;
                nb += 1.0;
            } else {
                si += e.weight;
                ni += 1.0;
            }
        }
        assert!((si / ni - 2.0).abs() < 0.01);
        // E|N(1, 1/4)| is 1 + a tiny folded tail
        assert!((sb / nb - 1.0).abs() < 0.02);
    }

    #[test]
    fn planted_partition_basic_properties() {
        let params = PlantedPartitionParams { n: 4000, communities: 56, ..Default::default() };
        let (g, p) = generate_planted_partition(&params, 5).unwrap();
        assert_eq!(g.node_count(), 4000);
        assert_eq!(p.cluster_count(), 56);
        assert!(g.is_connected());
        let expected = params.avg_degree * 4000.0 / 2.0;
        assert!((g.edge_count() as f64 - expected).abs() < 0.1 * expected, "{}", g.edge_count());
        let frac = boundary_edges(&g, &p).unwrap().len() as f64 / g.edge_count() as f64;
        assert!((frac - params.mixing).abs() < 0.03, "{frac}");
        let again = generate_planted_partition(&params, 5).unwrap();
        assert_eq!(g, again.0);
    }

    #[test]
    fn low_mixing_has_tiny_boundary() {
        for seed in 0..20 {
            let params = PlantedPartitionParams { n: 2000, communities: 28, mixing: 0.002, ..Default::default() };
            let (g, p) = generate_planted_partition(&params, seed).unwrap();
            let frac = boundary_edges(&g, &p).unwrap().len() as f64 / g.edge_count() as f64;
            assert!(frac < 0.01, "seed {seed}: {frac}");
        }
    }

    #[test]
    fn community_sizes_follow_the_power_law() {
        // maximum-likelihood exponent of the discrete sizes, pooled over seeds
        let params = PlantedPartitionParams { n: 20_000, communities: 280, ..Default::default() };
        let mut estimates = Vec::new();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sizes = community_sizes(&params, &mut rng).unwrap();
            let smin = *sizes.iter().min().unwrap() as f64 - 0.5;
            let log_sum: f64 = sizes.iter().map(|&s| (s as f64 / smin).ln()).sum();
            estimates.push(1.0 + sizes.len() as f64 / log_sum);
        }
        let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
        // truncation at size_range biases the untruncated estimator low
        assert!((mean - params.size_exponent).abs() < 0.3, "{mean}");
    }

    #[test]
    fn full_scale_calibration() {
        let params = PlantedPartitionParams { n: 100_000, communities: 1399, avg_degree: 18.9, ..Default::default() };
        let (g, p) = generate_planted_partition(&params, 1).unwrap();
        assert_eq!(p.cluster_count(), 1399);
        let e = g.edge_count() as f64;
        assert!((e - 9.45e5).abs() < 0.1 * 9.45e5, "{e}");
    }

    #[test]
    fn invalid_parameters() {
        let bad = PlantedPartitionParams { mixing: 1.0, ..Default::default() };
        assert!(matches!(generate_planted_partition(&bad, 0), Err(BenchError::InvalidSpec(_))));
        let bad = PlantedPartitionParams { communities: 1, ..Default::default() };
        assert!(matches!(generate_planted_partition(&bad, 0), Err(BenchError::InvalidSpec(_))));
    }
}
