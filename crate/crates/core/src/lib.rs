//! Recovery of clustered graph signals from few noisy samples via the
//! network Lasso, with max-flow certificates for sampling sets.

pub mod bench;
pub mod certify;
pub mod flow;
pub mod graph;
pub mod io;
pub mod simplex;
pub mod solve;
pub mod spectral;

pub use graph::{DataGraph, GraphSignal, Observation, Partition};
