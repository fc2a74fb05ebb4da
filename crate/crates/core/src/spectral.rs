//! Graph Laplacian, graph Fourier transform and the label-propagation
//! baseline that smooths with the Laplacian quadratic form.

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::graph::{DataGraph, GraphError, GraphSignal, Observation};

/// Largest graph for which dense spectral routines are allowed.
pub const MAX_DENSE_NODES: usize = 5000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("dense spectral routines limited to {limit} nodes, graph has {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("frequency index {index} out of range for {n} eigenvectors")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("label propagation needs at least one sampled node")]
    NoSamples,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

/// Dense `L = D - W`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianMatrix(DMatrix<f64>);

impl LaplacianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    /// `x^T L x`.
    pub fn quadratic_form(&self, x: &GraphSignal) -> Result<f64> {
        if x.len() != self.size() {
            return Err(SpectralError::DimensionMismatch { expected: self.size(), found: x.len() });
        }
        let v = DVector::from_column_slice(x.values());
        Ok(v.dot(&(&self.0 * &v)))
    }
}

pub fn laplacian(g: &DataGraph) -> Result<LaplacianMatrix> {
    let n = g.node_count();
    if n > MAX_DENSE_NODES {
        return Err(SpectralError::TooLarge { n, limit: MAX_DENSE_NODES });
    }
    let mut l = DMatrix::zeros(n, n);
    for e in g.edges() {
        l[(e.i, e.j)] -= e.weight;
        l[(e.j, e.i)] -= e.weight;
        l[(e.i, e.i)] += e.weight;
        l[(e.j, e.j)] += e.weight;
    }
    Ok(LaplacianMatrix(l))
}

/// `sum_{ {i,j} } W_ij (x[j] - x[i])^2`, evaluated over the edge list.
pub fn quadratic_form(g: &DataGraph, x: &GraphSignal) -> Result<f64> {
    if x.len() != g.node_count() {
        return Err(SpectralError::DimensionMismatch { expected: g.node_count(), found: x.len() });
    }
    Ok(g.edges()
        .iter()
        .map(|e| {
            let d = x[e.j] - x[e.i];
            e.weight * d * d
        })
        .sum())
}

/// Orthonormal Laplacian eigenbasis, eigenvalues ascending.
///
/// Each eigenvector is signed so that its largest-magnitude entry (first
/// such index, up to rounding) is positive.
#[derive(Debug, Clone)]
pub struct GftBasis {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl GftBasis {
    pub fn new(l: &LaplacianMatrix) -> Self {
        let n = l.size();
        let eig = SymmetricEigen::new(l.matrix().clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut vectors = DMatrix::zeros(n, n);
        let mut eigenvalues = Vec::with_capacity(n);
        for (col, &k) in order.iter().enumerate() {
            let mut u = eig.eigenvectors.column(k).into_owned();
            let peak = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let lead = u.iter().position(|v| v.abs() >= peak - 1e-12 * peak.max(1.0)).unwrap_or(0);
            if u[lead] < 0.0 {
                u.neg_mut();
            }
            vectors.set_column(col, &u);
            eigenvalues.push(eig.eigenvalues[k]);
        }
        Self { eigenvalues, vectors }
    }

    pub fn of_graph(g: &DataGraph) -> Result<Self> {
        Ok(Self::new(&laplacian(g)?))
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector `l` (0-based, ascending frequency).
    pub fn eigenvector(&self, l: usize) -> Vec<f64> {
        self.vectors.column(l).iter().copied().collect()
    }

    /// Synthesizes `sum_l coeffs[l] u_l`.
    pub fn inverse(&self, coeffs: &[f64]) -> Result<GraphSignal> {
        if coeffs.len() != self.len() {
            return Err(SpectralError::DimensionMismatch { expected: self.len(), found: coeffs.len() });
        }
        let c = DVector::from_column_slice(coeffs);
        Ok(GraphSignal::new((&self.vectors * c).iter().copied().collect())?)
    }
}

/// GFT coefficients `u_l^T x`.
pub fn gft(basis: &GftBasis, x: &GraphSignal) -> Result<Vec<f64>> {
    if x.len() != basis.len() {
        return Err(SpectralError::DimensionMismatch { expected: basis.len(), found: x.len() });
    }
    let v = DVector::from_column_slice(x.values());
    Ok((basis.vectors.transpose() * v).iter().copied().collect())
}

/// `sum_{l in active} u_l` for 0-based frequency indices `active`.
pub fn band_limited_signal(basis: &GftBasis, active: &[usize]) -> Result<GraphSignal> {
    let mut coeffs = vec![0.0; basis.len()];
    for &l in active {
        if l >= basis.len() {
            return Err(SpectralError::IndexOutOfRange { index: l, n: basis.len() });
        }
        coeffs[l] = 1.0;
    }
    basis.inverse(&coeffs)
}

#[derive(Debug, Clone)]
pub struct LabelPropagation {
    pub estimate: GraphSignal,
    /// Unsampled nodes without neighbors; they keep the initial value 0.
    pub isolated: Vec<usize>,
}

pub fn label_propagation(g: &DataGraph, obs: &Observation, iterations: usize) -> Result<LabelPropagation> {
    label_propagation_with(g, obs, iterations, |_, _| {})
}

/// Harmonic label propagation with clamped samples: `iterations` in-place
/// sweeps in ascending node order, each unsampled node replaced by the
/// weighted mean of its neighbors. `observe(sweep, x)` runs after every
/// sweep (1-based).
pub fn label_propagation_with(
    g: &DataGraph,
    obs: &Observation,
    iterations: usize,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<LabelPropagation> {
    if obs.is_empty() {
        return Err(SpectralError::NoSamples);
    }
    let n = g.node_count();
    let clamp = obs.dense(n);
    if let Some(&bad) = obs.nodes().iter().find(|&&i| i >= n) {
        return Err(GraphError::NodeOutOfRange { node: bad, n }.into());
    }
    let mut x = vec![0.0; n];
    for (i, y) in obs.samples() {
        x[i] = y;
    }
    let isolated: Vec<usize> = (0..n).filter(|&i| clamp[i].is_none() && g.degree(i) == 0).collect();
    if !isolated.is_empty() {
        warn!("{} unsampled node(s) have no neighbors and stay at 0", isolated.len());
    }
    let edges = g.edges();
    for sweep in 1..=iterations {
        for i in 0..n {
            if clamp[i].is_some() || g.degree(i) == 0 {
                continue;
            }
            let (mut num, mut den) = (0.0, 0.0);
            for &(j, e) in g.neighbors(i) {
                let w = edges[e].weight;
                num += w * x[j];
                den += w;
            }
            x[i] = num / den;
        }
        observe(sweep, &x);
    }
    Ok(LabelPropagation { estimate: GraphSignal::new(x)?, isolated })
}
