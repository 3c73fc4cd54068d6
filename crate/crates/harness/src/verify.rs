//! Deterministic self-check suite.
//!
//! Every check derives its inputs from the caller's seed, runs the engine
//! against an oracle or a frozen expectation, and reports a stable one-line
//! detail. Nothing here reads the clock: two runs with the same seed must
//! produce byte-identical reports.

use std::f64::consts::TAU;

use freshmem_core::{
    band_frequencies, memory_view, reconstruct, select_residual, Engine, EngineConfig,
    FrameFeature, FrequencyBank, ResidualBuffer,
};

use crate::metrics::boundary_metrics;
use crate::oracle;
use crate::sweep::run_boundary_log;
use crate::synth::{gaussian_stream, generate, SyntheticSpec};
use crate::fmt_sig;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        CheckResult { name, pass, detail }
    }
}

/// Runs the full suite. Deterministic per seed; no wall-clock anywhere.
pub fn run_suite(seed: u64) -> Vec<CheckResult> {
    let sub = |k: u64| seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    vec![
        band_layout(),
        identity_reconstruction(),
        spectrum_oracle(sub(1)),
        residual_fusion(sub(2)),
        segmentation_oracle(sub(3)),
        planted_recovery(sub(4)),
        budget_conservation(sub(5)),
        split_run(sub(6)),
        view_spacing(),
        metric_conventions(),
        generator_determinism(sub(7)),
    ]
}

fn band_layout() -> CheckResult {
    let got = band_frequencies(3, 0.01, 0.04).expect("valid layout");
    let want = [TAU * 0.01, TAU * 0.02, TAU * 0.04];
    let mut worst = 0.0f64;
    for (g, w) in got.iter().zip(&want) {
        worst = worst.max(((g - w) / w).abs());
    }
    let full = band_frequencies(16, 0.01, 0.5).expect("valid layout");
    let endpoints_ok = ((full[0] - TAU * 0.01) / (TAU * 0.01)).abs() <= 1e-12
        && ((full[15] - TAU * 0.5) / (TAU * 0.5)).abs() <= 1e-12;
    let monotone = full.windows(2).all(|w| w[0] < w[1]);
    CheckResult::new(
        "band-layout",
        worst <= 1e-12 && endpoints_ok && monotone,
        format!("max relative deviation {}", fmt_sig(worst)),
    )
}

fn identity_reconstruction() -> CheckResult {
    let frame = FrameFeature::new(0, 2, 3, vec![0.7, -1.3, 2.4, 0.0, 5.5, -0.2]).unwrap();
    let mut bank = FrequencyBank::new(16, 0.01, 0.5, 0.9, 2, 3).unwrap();
    bank.update(&frame).unwrap();
    let empty = ResidualBuffer::new(4).unwrap();
    let rec = reconstruct(&bank, &empty, 0).unwrap();
    let worst = rec
        .frame
        .values()
        .iter()
        .zip(frame.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    CheckResult::new(
        "identity-reconstruction",
        worst <= 1e-12,
        format!("max absolute deviation {}", fmt_sig(worst)),
    )
}

fn spectrum_oracle(seed: u64) -> CheckResult {
    let config = EngineConfig::default();
    let frames = gaussian_stream(seed, 2000, 2, 3);
    let mut engine = Engine::new(config.clone(), 2, 3).unwrap();
    for f in &frames {
        engine.step(f.clone()).unwrap();
    }
    let assimilated = &frames[..frames.len() - config.window_len];
    let (re, im) = oracle::batch_coefficients(
        assimilated,
        config.bands,
        config.f_min,
        config.f_max,
        config.gamma,
    );
    let coeff = engine.bank().coefficients();
    let scale = re
        .iter()
        .zip(&im)
        .map(|(r, i)| (r * r + i * i).sqrt())
        .fold(0.0f64, f64::max);
    let worst = coeff
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let dr = c.re - re[i];
            let di = c.im - im[i];
            (dr * dr + di * di).sqrt()
        })
        .fold(0.0f64, f64::max)
        / scale;
    CheckResult::new(
        "spectrum-oracle",
        worst <= 1e-10,
        format!("max relative error {} over {} coefficients", fmt_sig(worst), coeff.len()),
    )
}

fn residual_fusion(seed: u64) -> CheckResult {
    let config = EngineConfig::default();
    let frames = gaussian_stream(seed, 400, 4, 6);
    let mut engine = Engine::new(config.clone(), 4, 6).unwrap();
    for f in &frames {
        engine.step(f.clone()).unwrap();
    }
    let mut fused_exact = true;
    let mut entries = 0usize;
    for entry in engine.residuals().iter() {
        let rec = engine.reconstruct_at(entry.t).unwrap();
        if !rec.residual_applied {
            fused_exact = false;
        }
        for (row, &idx) in entry.indices.iter().enumerate() {
            let got = rec.frame.token(idx);
            let want = &entry.tokens[row * 6..(row + 1) * 6];
            if got
                .iter()
                .zip(want)
                .any(|(a, b)| a.to_bits() != b.to_bits())
            {
                fused_exact = false;
            }
        }
        entries += 1;
    }
    let mut selection_agrees = true;
    for (i, f) in gaussian_stream(seed ^ 0xABCD, 200, 6, 3).iter().enumerate() {
        let ratio = [0.1, 0.34, 0.5, 1.0][i % 4];
        if select_residual(f, ratio).indices != oracle::top_norm_indices(f, ratio) {
            selection_agrees = false;
        }
    }
    CheckResult::new(
        "residual-fusion",
        fused_exact && selection_agrees && entries > 0,
        format!("{entries} ring entries bit-exact; selection matched full-sort on 200 frames"),
    )
}

fn segmentation_oracle(seed: u64) -> CheckResult {
    let spec = SyntheticSpec {
        episodes: 12,
        ..SyntheticSpec::default()
    };
    let planted = generate(&spec, seed);
    let config = EngineConfig::default();
    let streaming = run_boundary_log(&config, &planted.frames).unwrap();
    let assimilated = &planted.frames[..planted.frames.len() - config.window_len];
    let (offline, _) = oracle::offline_boundaries(assimilated, config.theta_event);
    CheckResult::new(
        "segmentation-oracle",
        streaming == offline,
        format!(
            "streaming log and offline pass agree on {} boundaries",
            offline.len()
        ),
    )
}

fn planted_recovery(seed: u64) -> CheckResult {
    let spec = SyntheticSpec::default();
    let planted = generate(&spec, seed);
    let predicted = run_boundary_log(&EngineConfig::default(), &planted.frames).unwrap();
    let score = boundary_metrics(&predicted, &planted.boundaries, 0);
    CheckResult::new(
        "planted-recovery",
        score.precision == 1.0 && score.recall == 1.0,
        format!(
            "precision {} recall {} over {} planted boundaries",
            fmt_sig(score.precision),
            fmt_sig(score.recall),
            score.truth
        ),
    )
}

fn budget_conservation(seed: u64) -> CheckResult {
    let spec = SyntheticSpec {
        episodes: 60,
        ..SyntheticSpec::default()
    };
    let planted = generate(&spec, seed);
    let config = EngineConfig::default();
    let mut engine = Engine::new(config.clone(), spec.s, spec.d).unwrap();
    for f in &planted.frames {
        engine.step(f.clone()).unwrap();
    }
    let evicted = planted.frames.len() as u64 - config.window_len as u64;
    let closed: u64 = engine.stm().episodes().iter().map(|e| e.frame_count).sum();
    let conserved = closed + engine.stm().active_len() as u64 == evicted;
    let budgets = engine.stm().episodes().len() <= config.stm_capacity
        && engine.residuals().len() <= config.mfm_capacity
        && engine.window().len() <= config.window_len;
    let merged = engine
        .stm()
        .episodes()
        .iter()
        .any(|e| e.merged_from > 0);
    CheckResult::new(
        "budget-conservation",
        conserved && budgets && merged,
        format!(
            "{} episodes hold {} frames + {} active = {} evicted",
            engine.stm().episodes().len(),
            closed,
            engine.stm().active_len(),
            evicted
        ),
    )
}

fn split_run(seed: u64) -> CheckResult {
    let frames = gaussian_stream(seed, 600, 2, 4);
    let config = EngineConfig::default();
    let mut full = Engine::new(config.clone(), 2, 4).unwrap();
    let mut first = Engine::new(config, 2, 4).unwrap();
    for f in &frames[..300] {
        full.step(f.clone()).unwrap();
        first.step(f.clone()).unwrap();
    }
    let mut bytes = Vec::new();
    first.export_state(&mut bytes).unwrap();
    let mut resumed = Engine::import_state(bytes.as_slice()).unwrap();
    for f in &frames[300..] {
        full.step(f.clone()).unwrap();
        resumed.step(f.clone()).unwrap();
    }
    let a = full.snapshot().to_json(true);
    let b = resumed.snapshot().to_json(true);
    CheckResult::new(
        "split-run",
        a == b,
        format!("resumed snapshot identical across {} bytes", a.len()),
    )
}

fn view_spacing() -> CheckResult {
    let mut bank = FrequencyBank::new(16, 0.01, 0.5, 0.9, 1, 1).unwrap();
    for t in 0..100 {
        let frame = FrameFeature::new(t, 1, 1, vec![(t as f64 * 0.37).sin()]).unwrap();
        bank.update(&frame).unwrap();
    }
    let empty = ResidualBuffer::new(4).unwrap();
    let view = memory_view(&bank, &empty, 5).unwrap();
    let got: Vec<u64> = view.iter().map(|r| r.tau()).collect();
    let want = vec![0, 68, 90, 97, 99];
    CheckResult::new(
        "view-spacing",
        got == want,
        format!("5 slots over 100 steps landed at {got:?}"),
    )
}

fn metric_conventions() -> CheckResult {
    let half = boundary_metrics(&[11, 35], &[10, 20], 1);
    let vacuous = boundary_metrics(&[], &[5, 10], 2);
    let pass = half.precision == 0.5
        && half.recall == 0.5
        && half.f1 == 0.5
        && vacuous.precision == 1.0
        && vacuous.vacuous_precision
        && vacuous.recall == 0.0
        && vacuous.f1 == 0.0;
    CheckResult::new(
        "metric-conventions",
        pass,
        format!(
            "frozen example scored F1 {}; empty predictions scored F1 {}",
            fmt_sig(half.f1),
            fmt_sig(vacuous.f1)
        ),
    )
}

fn generator_determinism(seed: u64) -> CheckResult {
    let spec = SyntheticSpec::default();
    let a = generate(&spec, seed);
    let b = generate(&spec, seed);
    CheckResult::new(
        "generator-determinism",
        a == b,
        format!(
            "{} frames, {} boundaries reproduced bit-for-bit",
            a.len(),
            a.boundaries.len()
        ),
    )
}
