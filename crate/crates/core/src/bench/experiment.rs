//! End-to-end recovery experiments: generate, sample, observe, solve, score.

use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generators::{generate_chain, generate_planted_partition, PlantedPartitionParams, WeightDist};
use super::sampling::{sample_boundary_guided, sample_uniform, GuidedMode};
use super::{BenchError, Result, StageContext};
use crate::certify::{lemma1_constants, min_feasible_k, SufficientCondition, MAX_PATTERN_EDGES};
use crate::graph::{boundary_edges, clustered_signal, nmse, DataGraph, GraphSignal, Observation, Partition};
use crate::io;
use crate::solve::{nlasso_admm_with, SolverConfig};
use crate::spectral::label_propagation_with;

pub const PRESETS: [&str; 3] = ["chain-noisy", "chain-noiseless", "lfr-like"];
/// Rows written to `signal_head.csv`.
pub const HEAD_ROWS: usize = 100;
pub const THREADS_ENV: &str = "NETLASSO_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Chain { n: usize, cluster_size: usize, intra: WeightDist, inter: WeightDist },
    PlantedPartition(PlantedPartitionParams),
}

/// How cluster values `a_l` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientRule {
    /// `low, high, low, high, ...` by cluster index.
    Alternating { low: f64, high: f64 },
    Uniform { low: f64, high: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub family: Family,
    pub coefficients: CoefficientRule,
    pub noise_sigma: f64,
    /// Size of both sampling sets.
    pub sample_budget: usize,
    /// Construction of the boundary-guided set; the second set is uniform.
    pub sampler: GuidedMode,
    /// `L` of the certificate whose `K` sets `lambda = 1 / K`.
    pub certificate_l: f64,
    /// Use `lambda = 1 / K` whenever a finite `K` is certified.
    pub lambda_from_certificate: bool,
    pub solver: SolverConfig,
    /// Also run label propagation for `solver.max_iterations` sweeps.
    pub label_propagation: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Nlasso,
    LabelPropagation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    BoundaryGuided,
    Uniform,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Nlasso => "nlasso",
            Method::LabelPropagation => "label_propagation",
        }
    }
}

impl Sampler {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampler::BoundaryGuided => "boundary_guided",
            Sampler::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRun {
    pub method: Method,
    pub sampler: Sampler,
    /// NMSE after each iteration (sweep for label propagation).
    pub nmse_trace: Vec<f64>,
    pub final_nmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateInfo {
    /// `min_feasible_k` or `lemma1`.
    pub method: String,
    pub k: Option<f64>,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeadRow {
    pub node: usize,
    pub truth: f64,
    pub recovered_m1: f64,
    pub recovered_m2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub node_count: usize,
    pub edge_count: usize,
    pub cluster_count: usize,
    pub boundary_count: usize,
    pub sample_size: usize,
    pub partial_coverage: bool,
    pub certificate: CertificateInfo,
    pub lambda: f64,
    pub runs: Vec<MethodRun>,
    #[serde(skip)]
    pub signal_head: Vec<HeadRow>,
}

impl ExperimentResult {
    pub fn run(&self, method: Method, sampler: Sampler) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.method == method && r.sampler == sampler)
    }

    pub fn final_nmse(&self, method: Method, sampler: Sampler) -> Option<f64> {
        self.run(method, sampler).map(|r| r.final_nmse)
    }

    /// Writes `result.json`, `nmse_trace.csv` and `signal_head.csv` into
    /// `dir`, each through a temporary file and rename.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_vec_pretty(self).map_err(std::io::Error::other)?;
        io::write_atomic(&dir.join("result.json"), &json)?;
        let mut trace = String::from("iteration,method,sampler,nmse\n");
        for run in &self.runs {
            for (k, v) in run.nmse_trace.iter().enumerate() {
                trace.push_str(&format!("{},{},{},{:e}\n", k + 1, run.method.as_str(), run.sampler.as_str(), v));
            }
        }
        io::write_atomic(&dir.join("nmse_trace.csv"), trace.as_bytes())?;
        let mut head = String::from("node,true,recovered_m1,recovered_m2\n");
        for r in &self.signal_head {
            head.push_str(&format!("{},{},{},{}\n", r.node + 1, r.truth, r.recovered_m1, r.recovered_m2));
        }
        io::write_atomic(&dir.join("signal_head.csv"), head.as_bytes())
    }
}

fn chain_spec(name: &str, sigma: f64) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        family: Family::Chain {
            n: 10_000,
            cluster_size: 10,
            intra: WeightDist::AbsNormal { mean: 2.0, std: 0.5 },
            inter: WeightDist::AbsNormal { mean: 1.0, std: 0.5 },
        },
        coefficients: CoefficientRule::Alternating { low: 1.0, high: 5.0 },
        noise_sigma: sigma,
        sample_budget: 2_000,
        sampler: GuidedMode::Lemma1 { l: 2.0 },
        certificate_l: 2.0,
        lambda_from_certificate: true,
        solver: SolverConfig { lambda: 0.2, rho: 0.01, max_iterations: 300, ..Default::default() },
        label_propagation: false,
        seed: 1,
    }
}

/// Named desk-scale experiment.
pub fn preset(name: &str) -> Option<ExperimentSpec> {
    match name {
        "chain-noisy" => Some(chain_spec(name, 0.5)),
        "chain-noiseless" => Some(chain_spec(name, 0.0)),
        "lfr-like" => Some(ExperimentSpec {
            name: name.into(),
            family: Family::PlantedPartition(PlantedPartitionParams::default()),
            coefficients: CoefficientRule::Uniform { low: 1.0, high: 50.0 },
            noise_sigma: 0.5,
            sample_budget: 2_000,
            sampler: GuidedMode::EdgeSorted,
            certificate_l: 2.0,
            lambda_from_certificate: true,
            solver: SolverConfig { lambda: 0.01, rho: 0.01, max_iterations: 300, ..Default::default() },
            label_propagation: true,
            seed: 1,
        }),
        _ => None,
    }
}

impl ExperimentSpec {
    /// Scales the instance to `10^5` nodes, keeping the sampling fraction.
    pub fn full_scale(mut self) -> Self {
        let factor = match &mut self.family {
            Family::Chain { n, .. } => {
                let f = 100_000 / *n;
                *n = 100_000;
                f
            }
            Family::PlantedPartition(p) => {
                let f = 100_000 / p.n;
                p.n = 100_000;
                p.communities = 1399;
                f
            }
        };
        self.sample_budget *= factor.max(1);
        self
    }

    pub fn node_count(&self) -> usize {
        match &self.family {
            Family::Chain { n, .. } => *n,
            Family::PlantedPartition(p) => p.n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(BenchError::InvalidSpec(format!("noise_sigma = {}", self.noise_sigma)));
        }
        if self.sample_budget > self.node_count() {
            return Err(BenchError::InvalidSpec(format!(
                "sample budget {} exceeds {} nodes",
                self.sample_budget,
                self.node_count()
            )));
        }
        if let CoefficientRule::Uniform { low, high } = self.coefficients {
            if !(low.is_finite() && high.is_finite() && low < high) {
                return Err(BenchError::InvalidSpec(format!("uniform coefficients on [{low}, {high}]")));
            }
        }
        if !(self.certificate_l > 0.0) {
            return Err(BenchError::InvalidSpec(format!("certificate_l = {}", self.certificate_l)));
        }
        self.solver.validate().stage("solver config")
    }
}

/// Independent sub-seed for stage `stream` of a run.
fn stage_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn thread_pool() -> Option<rayon::ThreadPool> {
    let cap: usize = std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t| t > 0)?;
    rayon::ThreadPoolBuilder::new().num_threads(cap).build().ok()
}

/// Runs one experiment, capping worker threads at `NETLASSO_THREADS` when
/// set.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    match thread_pool() {
        Some(pool) => pool.install(|| run_single(spec)),
        None => run_single(spec),
    }
}

/// Runs independent experiments in parallel; results keep the input order.
pub fn run_experiments(specs: &[ExperimentSpec]) -> Vec<Result<ExperimentResult>> {
    let go = || specs.par_iter().map(run_single).collect();
    match thread_pool() {
        Some(pool) => pool.install(go),
        None => go(),
    }
}

fn instance(spec: &ExperimentSpec, seed: u64) -> Result<(DataGraph, Partition)> {
    match &spec.family {
        Family::Chain { n, cluster_size, intra, inter } => generate_chain(*n, *cluster_size, *intra, *inter, seed),
        Family::PlantedPartition(p) => generate_planted_partition(p, seed),
    }
}

fn coefficients(rule: CoefficientRule, count: usize, rng: &mut impl Rng) -> Vec<f64> {
    match rule {
        CoefficientRule::Alternating { low, high } => (0..count).map(|l| if l % 2 == 0 { low } else { high }).collect(),
        CoefficientRule::Uniform { low, high } => (0..count).map(|_| rng.random_range(low..high)).collect(),
    }
}

fn certificate(spec: &ExperimentSpec, g: &DataGraph, p: &Partition, sampled: &[usize]) -> Result<CertificateInfo> {
    let l = spec.certificate_l;
    let boundary = boundary_edges(g, p)?;
    let mut touching = vec![0usize; p.cluster_count()];
    for &id in &boundary {
        let e = g.edge(id);
        touching[p.cluster_of(e.i)] += 1;
        touching[p.cluster_of(e.j)] += 1;
    }
    if touching.iter().all(|&t| t <= MAX_PATTERN_EDGES) {
        let k = min_feasible_k(g, p, sampled, l).stage("certificate")?;
        return Ok(CertificateInfo { method: "min_feasible_k".into(), k: k.is_finite().then_some(k), l });
    }
    let k = match lemma1_constants(g, p, sampled, l).stage("certificate")? {
        SufficientCondition::Applicable { k, .. } => Some(k),
        SufficientCondition::NotApplicable { reason } => {
            log::info!("sufficient condition not applicable: {reason:?}");
            None
        }
    };
    Ok(CertificateInfo { method: "lemma1".into(), k, l })
}

fn nlasso_run(
    g: &DataGraph,
    obs: &Observation,
    truth: &GraphSignal,
    cfg: &SolverConfig,
    sampler: Sampler,
) -> Result<(MethodRun, GraphSignal)> {
    let mut trace = Vec::with_capacity(cfg.max_iterations);
    let denom: f64 = truth.values().iter().map(|v| v * v).sum();
    let report = nlasso_admm_with(g, obs, cfg, |_, x| {
        let num: f64 = x.iter().zip(truth.values()).map(|(a, b)| (a - b) * (a - b)).sum();
        trace.push(num / denom);
    })
    .stage("nlasso")?;
    let final_nmse = nmse(&report.estimate, truth)?;
    Ok((MethodRun { method: Method::Nlasso, sampler, nmse_trace: trace, final_nmse }, report.estimate))
}

fn lp_run(g: &DataGraph, obs: &Observation, truth: &GraphSignal, sweeps: usize, sampler: Sampler) -> Result<MethodRun> {
    let mut trace = Vec::with_capacity(sweeps);
    let denom: f64 = truth.values().iter().map(|v| v * v).sum();
    let out = label_propagation_with(g, obs, sweeps, |_, x| {
        let num: f64 = x.iter().zip(truth.values()).map(|(a, b)| (a - b) * (a - b)).sum();
        trace.push(num / denom);
    })
    .stage("label propagation")?;
    let final_nmse = nmse(&out.estimate, truth)?;
    Ok(MethodRun { method: Method::LabelPropagation, sampler, nmse_trace: trace, final_nmse })
}

fn run_single(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let (g, p) = instance(spec, stage_rng(spec.seed, 0).next_u64())?;
    let coeffs = coefficients(spec.coefficients, p.cluster_count(), &mut stage_rng(spec.seed, 1));
    let truth = clustered_signal(&p, &coeffs)?;
    if truth.values().iter().all(|&v| v == 0.0) {
        return Err(BenchError::InvalidSpec("signal is identically zero".into()));
    }
    let n = g.node_count();

    let guided = sample_boundary_guided(&g, &p, spec.sample_budget, spec.sampler, stage_rng(spec.seed, 2).next_u64())?;
    if guided.partial_coverage {
        log::warn!("{}: boundary-guided sampling ran out of budget", spec.name);
    }
    let uniform = sample_uniform(n, guided.nodes.len(), stage_rng(spec.seed, 3).next_u64());

    // one noise draw per node, shared by both sampling sets
    let noise: Vec<f64> = if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
        let mut rng = stage_rng(spec.seed, 4);
        (0..n).map(|_| normal.sample(&mut rng)).collect()
    } else {
        vec![0.0; n]
    };
    let observe = |nodes: &[usize]| {
        let e: Vec<f64> = nodes.iter().map(|&i| noise[i]).collect();
        Observation::from_signal(&truth, nodes, Some(&e))
    };
    let obs_m1 = observe(&guided.nodes)?;
    let obs_m2 = observe(&uniform)?;

    let cert = certificate(spec, &g, &p, &guided.nodes)?;
    let lambda = match cert.k {
        Some(k) if spec.lambda_from_certificate && k > 0.0 => 1.0 / k,
        _ => spec.solver.lambda,
    };
    let cfg = SolverConfig { lambda, ..spec.solver.clone() };
    log::info!("{}: N = {n}, |M| = {}, K = {:?}, lambda = {lambda}", spec.name, guided.nodes.len(), cert.k);

    let (first, second) = rayon::join(
        || nlasso_run(&g, &obs_m1, &truth, &cfg, Sampler::BoundaryGuided),
        || nlasso_run(&g, &obs_m2, &truth, &cfg, Sampler::Uniform),
    );
    let (run_m1, x_m1) = first?;
    let (run_m2, x_m2) = second?;
    let mut runs = vec![run_m1, run_m2];
    if spec.label_propagation {
        let sweeps = spec.solver.max_iterations;
        let (a, b) = rayon::join(
            || lp_run(&g, &obs_m1, &truth, sweeps, Sampler::BoundaryGuided),
            || lp_run(&g, &obs_m2, &truth, sweeps, Sampler::Uniform),
        );
        runs.push(a?);
        runs.push(b?);
    }
    let signal_head = (0..n.min(HEAD_ROWS))
        .map(|i| HeadRow { node: i, truth: truth[i], recovered_m1: x_m1[i], recovered_m2: x_m2[i] })
        .collect();
    Ok(ExperimentResult {
        spec: spec.clone(),
        node_count: n,
        edge_count: g.edge_count(),
        cluster_count: p.cluster_count(),
        boundary_count: boundary_edges(&g, &p)?.len(),
        sample_size: guided.nodes.len(),
        partial_coverage: guided.partial_coverage,
        certificate: cert,
        lambda,
        runs,
        signal_head,
    })
}
