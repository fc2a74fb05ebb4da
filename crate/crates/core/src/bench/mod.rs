//! Synthetic instances, sampling sets and experiment drivers.

pub mod experiment;
pub mod fixtures;
pub mod generators;
pub mod sampling;

pub use experiment::{
    preset, run_experiment, run_experiments, CertificateInfo, CoefficientRule, ExperimentResult, ExperimentSpec, Family,
    Method, MethodRun, Sampler, PRESETS,
};
pub use generators::{generate_chain, generate_planted_partition, PlantedPartitionParams, WeightDist};
pub use sampling::{sample_boundary_guided, sample_uniform, GuidedMode, SampleSet};

use thiserror::Error;

use crate::graph::GraphError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("no admissible community sizes for {n} nodes in {communities} communities")]
    InfeasibleSizes { n: usize, communities: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub(crate) trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T, E: std::error::Error + Send + Sync + 'static> StageContext<T> for std::result::Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| BenchError::Stage { stage, source: Box::new(e) })
    }
}
