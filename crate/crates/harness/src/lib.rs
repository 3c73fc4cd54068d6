//! Evaluation kit for the freshmem engine.
//!
//! Everything the engine claims is checked here at desk scale: planted
//! streams that certify their own similarity margins ([`synth`]), brute-force
//! reference implementations that share only the frame type with the engine
//! ([`oracle`]), boundary and reconstruction metrics ([`metrics`]), per-step
//! cost profiling ([`latency`]), hyperparameter sweeps ([`sweep`]), and a
//! deterministic check suite ([`verify`]) whose output never contains
//! wall-clock readings.
//!
//! All randomness flows from explicit seeds; every function here is
//! bit-reproducible across runs.

pub mod latency;
pub mod metrics;
pub mod oracle;
pub mod sweep;
pub mod synth;
pub mod verify;

pub use latency::{latency_profile, median_nanos, StepProfile};
pub use metrics::{
    boundary_metrics, reconstruction_error_curve, reconstruction_mse, rows_to_csv, rows_to_json,
    BoundaryScore, ErrorCurvePoint, MetricRow,
};
pub use oracle::{batch_coefficients, offline_boundaries, top_norm_indices};
pub use sweep::{run_boundary_log, set_param, sweep_param, MSE_LAG};
pub use synth::{gaussian_frame, gaussian_stream, generate, PlantedStream, SyntheticSpec};
pub use verify::{run_suite, CheckResult};

use freshmem_core::{ConfigError, MemoryError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("unknown sweep parameter `{0}`")]
    UnknownParam(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
}

/// Formats with 12 significant digits, the fixed precision of every numeric
/// report in this crate and the CLI. The output is a valid JSON number.
pub fn fmt_sig(v: f64) -> String {
    format!("{:.11e}", v)
}
