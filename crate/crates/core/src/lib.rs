//! Two-component Gibbs samplers under composition, random-sequence and
//! random-scan updates, with drift-condition certificates, Monte Carlo
//! drift verification and batch-means output analysis.

pub mod chain;
pub mod conditional;
pub mod diagnostics;
pub mod drift;
pub mod error;
pub mod models;
pub mod rng;
pub mod scan;
pub mod state;

pub use chain::{apply_kernel, run, run_thinned, walk, y_subchain, ChainRun, KernelEstimate};
pub use conditional::ConditionalPair;
pub use error::{Component, Error, Result};
pub use rng::{FixedVariates, RngStream, StreamRng, Variates};
pub use scan::{step, ScanStrategy, StrategyKind};
pub use state::JointState;
