//! File formats. Node and cluster ids are 1-based on disk.
//!
//! ```text
//! graph        {"n": N, "edges": [[i, j, w], ...]}
//! signal       {"values": [...]}
//! observation  {"samples": [[i, y], ...], "noise": [[i, e], ...]}   noise optional
//! partition    {"cluster_of": [...]}
//! sampling set {"nodes": [...]}
//! ```

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::certify::{ResolvingCertificate, Verdict};
use crate::graph::{DataGraph, GraphError, GraphSignal, Observation, Partition};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, IoError>;

#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SignalFile {
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ObservationFile {
    samples: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise: Option<Vec<(usize, f64)>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PartitionFile {
    cluster_of: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SamplingFile {
    nodes: Vec<usize>,
}

fn zero_based(id: usize, what: &str) -> Result<usize> {
    id.checked_sub(1).ok_or_else(|| IoError::Invalid(format!("{what} ids are 1-based, got 0")))
}

pub fn parse_graph(text: &str) -> Result<DataGraph> {
    let f: GraphFile = serde_json::from_str(text)?;
    let edges = f
        .edges
        .into_iter()
        .map(|(i, j, w)| Ok((zero_based(i, "node")?, zero_based(j, "node")?, w)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DataGraph::new(f.n, edges)?)
}

pub fn graph_to_json(g: &DataGraph) -> String {
    let f = GraphFile { n: g.node_count(), edges: g.edges().iter().map(|e| (e.i + 1, e.j + 1, e.weight)).collect() };
    serde_json::to_string(&f).expect("plain data")
}

pub fn parse_signal(text: &str) -> Result<GraphSignal> {
    let f: SignalFile = serde_json::from_str(text)?;
    Ok(GraphSignal::new(f.values)?)
}

pub fn signal_to_json(x: &GraphSignal) -> String {
    serde_json::to_string(&SignalFile { values: x.values().to_vec() }).expect("plain data")
}

/// Parses an observation over `n` nodes. Noise entries must cover the
/// sampled nodes exactly.
pub fn parse_observation(text: &str, n: usize) -> Result<Observation> {
    let f: ObservationFile = serde_json::from_str(text)?;
    let samples = f
        .samples
        .into_iter()
        .map(|(i, y)| Ok((zero_based(i, "node")?, y)))
        .collect::<Result<Vec<_>>>()?;
    let noise = match f.noise {
        None => None,
        Some(list) => {
            let mut by_node = std::collections::HashMap::with_capacity(list.len());
            for (i, e) in list {
                by_node.insert(zero_based(i, "node")?, e);
            }
            if by_node.len() != samples.len() {
                return Err(IoError::Invalid("noise must list every sampled node once".into()));
            }
            let aligned = samples
                .iter()
                .map(|(i, _)| by_node.get(i).copied().ok_or_else(|| IoError::Invalid(format!("no noise for node {}", i + 1))))
                .collect::<Result<Vec<_>>>()?;
            Some(aligned)
        }
    };
    Ok(Observation::new(n, samples, noise)?)
}

pub fn observation_to_json(obs: &Observation) -> String {
    let f = ObservationFile {
        samples: obs.samples().map(|(i, y)| (i + 1, y)).collect(),
        noise: obs.noise().map(|e| obs.nodes().iter().zip(e).map(|(&i, &v)| (i + 1, v)).collect()),
    };
    serde_json::to_string(&f).expect("plain data")
}

pub fn parse_partition(text: &str) -> Result<Partition> {
    let f: PartitionFile = serde_json::from_str(text)?;
    let labels = f.cluster_of.into_iter().map(|c| zero_based(c, "cluster")).collect::<Result<Vec<_>>>()?;
    Ok(Partition::new(labels)?)
}

pub fn partition_to_json(p: &Partition) -> String {
    serde_json::to_string(&PartitionFile { cluster_of: p.labels().iter().map(|c| c + 1).collect() }).expect("plain data")
}

/// Sampling set from `{"nodes": [...]}`; an observation file is accepted
/// too, in which case its sampled nodes are used.
pub fn parse_sampling_set(text: &str) -> Result<Vec<usize>> {
    let value: Value = serde_json::from_str(text)?;
    let ids: Vec<usize> = if value.get("nodes").is_some() {
        serde_json::from_value::<SamplingFile>(value)?.nodes
    } else if value.get("samples").is_some() {
        serde_json::from_value::<ObservationFile>(value)?.samples.into_iter().map(|(i, _)| i).collect()
    } else {
        return Err(IoError::Invalid("expected a \"nodes\" or \"samples\" field".into()));
    };
    ids.into_iter().map(|i| zero_based(i, "node")).collect()
}

pub fn sampling_set_to_json(nodes: &[usize]) -> String {
    serde_json::to_string(&SamplingFile { nodes: nodes.iter().map(|i| i + 1).collect() }).expect("plain data")
}

/// `node,value` rows.
pub fn signal_csv(x: &GraphSignal) -> String {
    let mut out = String::from("node,value\n");
    for (i, v) in x.values().iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, v));
    }
    out
}

/// `iteration,objective` rows.
pub fn trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("iteration,objective\n");
    for (k, v) in trace.iter().enumerate() {
        out.push_str(&format!("{},{}\n", k + 1, v));
    }
    out
}

/// `l,eigenvalue,coefficient` rows with 1-based `l`.
pub fn spectrum_csv(eigenvalues: &[f64], coefficients: &[f64]) -> String {
    let mut out = String::from("l,eigenvalue,coefficient\n");
    for (l, (lam, c)) in eigenvalues.iter().zip(coefficients).enumerate() {
        out.push_str(&format!("{},{},{}\n", l + 1, lam, c));
    }
    out
}

/// Certificate summary with 1-based node ids in the witness flows.
pub fn certificate_json(g: &DataGraph, cert: &ResolvingCertificate) -> Value {
    let mut out = json!({
        "verdict": if cert.is_resolved() { "resolved" } else { "not_resolved" },
        "K": cert.k,
        "L": cert.l,
        "boundary_size": cert.boundary.len(),
        "mode": cert.mode,
    });
    if let Verdict::NotResolved { failing_pattern } = &cert.verdict {
        out["failing_pattern"] = json!(failing_pattern.iter().map(|&b| u8::from(b)).collect::<Vec<_>>());
    }
    if let Some(witnesses) = &cert.witnesses {
        let flows: Vec<Value> = witnesses
            .iter()
            .map(|w| {
                let edges: Vec<Value> = g
                    .edges()
                    .iter()
                    .enumerate()
                    .map(|(id, e)| json!([e.i + 1, e.j + 1, w.flow.forward[id], w.flow.backward[id]]))
                    .collect();
                json!({ "pattern": w.pattern.iter().map(|&b| u8::from(b)).collect::<Vec<_>>(), "flows": edges })
            })
            .collect();
        out["witness_flows"] = Value::Array(flows);
    }
    out
}

/// Writes `bytes` to a temporary sibling of `path`, then renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| std::io::Error::other("path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| IoError::Invalid(format!("{}: {e}", path.display())))
}
