//! Brute-force reference implementations.
//!
//! These recompute everything the engine computes incrementally — band
//! layout, decayed spectra, pooled similarity, salient-token selection — by
//! direct summation and full sorts, sharing only the frame type with the
//! engine. They are the ground truth the fast paths are checked against, so
//! directness beats speed throughout.

use freshmem_core::FrameFeature;
use std::f64::consts::TAU;

/// Geometrically spaced angular frequencies over `[f_min, f_max]` cycles/step.
fn omegas(bands: usize, f_min: f64, f_max: f64) -> Vec<f64> {
    assert!(bands >= 1 && f_min > 0.0 && f_max >= f_min);
    if bands == 1 {
        return vec![TAU * f_min];
    }
    let ratio = f_max / f_min;
    (0..bands)
        .map(|i| TAU * f_min * ratio.powf(i as f64 / (bands - 1) as f64))
        .collect()
}

/// Decay-weighted spectrum by direct summation: every frame contributes
/// `gamma^(t_last - t) * x * e^(-j w t)` to each band, phases reduced mod 2pi
/// before the trig calls. Returns (re, im), band-major over `K*S*D`.
pub fn batch_coefficients(
    frames: &[FrameFeature],
    bands: usize,
    f_min: f64,
    f_max: f64,
    gamma: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert!(!frames.is_empty(), "oracle needs at least one frame");
    let (s, d) = frames[0].shape();
    let omegas = omegas(bands, f_min, f_max);
    let t_last = frames.last().unwrap().t();
    let mut re = vec![0.0f64; bands * s * d];
    let mut im = vec![0.0f64; bands * s * d];
    for f in frames {
        assert_eq!(f.shape(), (s, d), "frame shape changed mid-stream");
        let weight = gamma.powf((t_last - f.t()) as f64);
        for (k, &omega) in omegas.iter().enumerate() {
            let phase = (omega * f.t() as f64).rem_euclid(TAU);
            let (cos_p, sin_p) = (phase.cos(), phase.sin());
            let base = k * s * d;
            for (i, &x) in f.values().iter().enumerate() {
                re[base + i] += weight * x * cos_p;
                im[base + i] -= weight * x * sin_p;
            }
        }
    }
    (re, im)
}

/// Offline episode boundaries: one left-to-right pass over pooled frames,
/// flagging a boundary wherever the consecutive cosine drops below `theta`.
/// A zero-norm pooled vector scores 0 and is tallied in the second return.
pub fn offline_boundaries(frames: &[FrameFeature], theta: f64) -> (Vec<u64>, u64) {
    let mut boundaries = Vec::new();
    let mut zero_events = 0u64;
    let mut prev: Option<Vec<f64>> = None;
    for f in frames {
        let pooled = pool(f);
        if let Some(q) = &prev {
            let (score, degenerate) = guarded_cosine(q, &pooled);
            if degenerate {
                zero_events += 1;
            }
            if score < theta {
                boundaries.push(f.t());
            }
        }
        prev = Some(pooled);
    }
    (boundaries, zero_events)
}

/// Salient-token reference: full sort by descending L2 norm (ties to the
/// lower index), keep `ceil(ratio * S)` clamped to `[1, S]`, report ascending.
pub fn top_norm_indices(frame: &FrameFeature, ratio: f64) -> Vec<usize> {
    let (s, _) = frame.shape();
    let m = ((ratio * s as f64).ceil() as usize).clamp(1, s);
    let norms: Vec<f64> = (0..s)
        .map(|i| frame.token(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| {
        norms[b]
            .partial_cmp(&norms[a])
            .expect("finite norms")
            .then(a.cmp(&b))
    });
    let mut keep = order[..m].to_vec();
    keep.sort_unstable();
    keep
}

pub(crate) fn pool(frame: &FrameFeature) -> Vec<f64> {
    let (s, d) = frame.shape();
    let mut pooled = vec![0.0f64; d];
    for i in 0..s {
        for (p, v) in pooled.iter_mut().zip(frame.token(i)) {
            *p += v;
        }
    }
    let inv = 1.0 / s as f64;
    for p in &mut pooled {
        *p *= inv;
    }
    pooled
}

pub(crate) fn guarded_cosine(a: &[f64], b: &[f64]) -> (f64, bool) {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return (0.0, true);
    }
    (dot / (na.sqrt() * nb.sqrt()), false)
}
