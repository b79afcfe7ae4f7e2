//! Batch experiments: TOML configs, parallel matrix runs, scaling fits and
//! single-cell replay.

pub mod config;
pub mod fit;
pub mod run;

pub use config::{AlgorithmSpec, EnvironmentSpec, ExperimentConfig};
pub use fit::{fit_scaling, ScalingReport};
pub use run::{effective_threads, read_replay, read_summary, replay, run_matrix, MatrixReport, ReplayRecord, SummaryRow};
