//! Experiment harness for the `iterl2norm` library: precision sweeps,
//! convergence curves, the FISR comparison, latency curves and batch
//! normalization of vector files.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod rng;
pub mod stats;
pub mod vecio;

pub use config::HarnessConfig;
pub use error::{BenchError, Result};
pub use experiments::{
    run_compare_fisr, run_convergence, run_latency, run_normalize, run_precision, ExperimentKind,
    ExperimentSpec,
};
pub use stats::ErrorStats;
