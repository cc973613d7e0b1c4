//! Decentralized smoothing ADMM for sparse-penalized quantile regression
//! over agent networks, with a synthetic-data simulator, a diffusion
//! subgradient baseline, evaluation metrics and an experiment harness.

pub mod baseline;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod normal;
pub mod prox;
pub mod solver;
pub mod synth;
pub mod topology;

pub use error::{Error, Result};
pub use prox::{PenaltyKind, PenaltySpec, Schedule};
pub use solver::{SolverConfig, SolverState};
pub use synth::{GroundTruth, NodeData};
pub use topology::Graph;
