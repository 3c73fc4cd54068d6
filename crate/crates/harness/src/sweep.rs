//! Hyperparameter sweeps over planted streams.
//!
//! Each swept value is scored two ways per seed: boundary F1 against the
//! planted truth (tolerance 0) and reconstruction MSE at a fixed lag of 20
//! steps. Together they expose both failure directions — a threshold too lax
//! or too strict shows up in F1, a decay or band change shows up in MSE.

use freshmem_core::{Engine, EngineConfig, IngestEvent};

use crate::metrics::{boundary_metrics, reconstruction_error_curve, MetricRow};
use crate::synth::{generate, SyntheticSpec};
use crate::HarnessError;

pub const MSE_LAG: u64 = 20;

/// Assigns `value` to the named config field; integer fields reject
/// non-integral values.
pub fn set_param(config: &mut EngineConfig, param: &str, value: f64) -> Result<(), HarnessError> {
    let as_count = |v: f64| -> Result<usize, HarnessError> {
        if v < 0.0 || v.fract().abs() > 1e-9 || v > usize::MAX as f64 {
            return Err(HarnessError::Invalid(format!(
                "`{param}` takes a non-negative integer, got {v}"
            )));
        }
        Ok(v.round() as usize)
    };
    match param {
        "window_len" => config.window_len = as_count(value)?,
        "bands" => config.bands = as_count(value)?,
        "mfm_capacity" => config.mfm_capacity = as_count(value)?,
        "mfm_slots" => config.mfm_slots = as_count(value)?,
        "stm_capacity" => config.stm_capacity = as_count(value)?,
        "f_min" => config.f_min = value,
        "f_max" => config.f_max = value,
        "gamma" => config.gamma = value,
        "residual_ratio" => config.residual_ratio = value,
        "theta_event" => config.theta_event = value,
        "theta_merge" => config.theta_merge = value,
        "rho_min" => config.rho_min = value,
        "rho_max" => config.rho_max = value,
        other => return Err(HarnessError::UnknownParam(other.into())),
    }
    Ok(())
}

/// Sweeps one parameter over planted streams. Emits, per (value, seed), an
/// `f1` row and an `mse_dt20` row, in deterministic value-major order.
pub fn sweep_param(
    base: &EngineConfig,
    param: &str,
    values: &[f64],
    seeds: &[u64],
    spec: &SyntheticSpec,
) -> Result<Vec<MetricRow>, HarnessError> {
    let mut rows = Vec::with_capacity(values.len() * seeds.len() * 2);
    for &value in values {
        let mut config = base.clone();
        set_param(&mut config, param, value)?;
        config.validate()?;
        for &seed in seeds {
            let planted = generate(spec, seed);
            let predicted = run_boundary_log(&config, &planted.frames)?;
            let score = boundary_metrics(&predicted, &planted.boundaries, 0);
            rows.push(MetricRow {
                x: value,
                y: score.f1,
                series: "f1".into(),
                seed,
            });
            let curve = reconstruction_error_curve(&config, &planted.frames, &[MSE_LAG])?;
            rows.push(MetricRow {
                x: value,
                y: curve[0].mse,
                series: "mse_dt20".into(),
                seed,
            });
        }
    }
    Ok(rows)
}

/// Streams frames through a fresh engine and collects the boundary log.
pub fn run_boundary_log(
    config: &EngineConfig,
    frames: &[freshmem_core::FrameFeature],
) -> Result<Vec<u64>, HarnessError> {
    if frames.is_empty() {
        return Err(HarnessError::Invalid("empty stream".into()));
    }
    let (s, d) = frames[0].shape();
    let mut engine = Engine::new(config.clone(), s, d)?;
    let mut boundaries = Vec::new();
    for f in frames {
        let report = engine.step(f.clone())?;
        if report.stm_event == Some(IngestEvent::ClosedAndOpened) {
            boundaries.push(report.evicted.expect("episodic events follow evictions"));
        }
    }
    Ok(boundaries)
}
