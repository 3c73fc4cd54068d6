//! Per-step cost profiling.
//!
//! Constant-time claims are checked two ways: operation counters (exact,
//! hardware-independent — the preferred evidence) and wall-clock nanos
//! (noisy; always compare window medians, never single steps). Frame
//! generation happens outside the timed region.

use std::time::Instant;

use freshmem_core::{Engine, EngineConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::synth::gaussian_frame;
use crate::HarnessError;

#[derive(Clone, Copy, Debug)]
pub struct StepProfile {
    pub step: u64,
    /// Frequency-bank operations this step (coefficient updates).
    pub mfm_ops: u64,
    /// Similarity evaluations this step (boundary checks + merge scans).
    pub cos_evals: u64,
    /// Episode merges this step.
    pub merges: usize,
    pub nanos: u64,
}

/// Runs a fresh engine over `steps` random frames and records per-step costs.
pub fn latency_profile(
    config: &EngineConfig,
    s: usize,
    d: usize,
    steps: u64,
    seed: u64,
) -> Result<Vec<StepProfile>, HarnessError> {
    if steps < 2000 {
        return Err(HarnessError::Invalid(
            "latency profiles need at least 2000 steps".into(),
        ));
    }
    let mut engine = Engine::new(config.clone(), s, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profiles = Vec::with_capacity(steps as usize);
    for t in 0..steps {
        let frame = gaussian_frame(&mut rng, t, s, d);
        let ops_before = engine.bank().op_count();
        let cos_before = engine.stm().cos_evals();
        let started = Instant::now();
        let report = engine.step(frame)?;
        let nanos = started.elapsed().as_nanos() as u64;
        profiles.push(StepProfile {
            step: t,
            mfm_ops: engine.bank().op_count() - ops_before,
            cos_evals: engine.stm().cos_evals() - cos_before,
            merges: report.merges,
            nanos,
        });
    }
    Ok(profiles)
}

/// Median wall-clock nanos over steps in `[lo, hi)`.
pub fn median_nanos(profiles: &[StepProfile], lo: u64, hi: u64) -> f64 {
    let mut window: Vec<u64> = profiles
        .iter()
        .filter(|p| (lo..hi).contains(&p.step))
        .map(|p| p.nanos)
        .collect();
    assert!(!window.is_empty(), "empty profile window");
    window.sort_unstable();
    let n = window.len();
    if n % 2 == 1 {
        window[n / 2] as f64
    } else {
        (window[n / 2 - 1] + window[n / 2]) as f64 / 2.0
    }
}
