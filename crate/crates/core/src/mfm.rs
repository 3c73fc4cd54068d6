//! Decayed frequency-domain gist memory.
//!
//! Every frame evicted from the sliding window folds into a bank of complex
//! coefficients, one per (band, token, dim):
//!
//! ```text
//!   C[k] <- gamma^dt * C[k] + x_t * e^(-j*w_k*t)
//! ```
//!
//! so a step costs O(K*S*D) regardless of how much history the bank has
//! absorbed. Any past step `tau` can be re-rendered by the inverse transform
//! (mean over bands of `Re(C[k] * e^(+j*w_k*tau))`), which is exact for a
//! single assimilated frame and degrades gracefully with age as decay thins
//! out old contributions.
//!
//! Band frequencies are geometrically spaced: resolution is dense at the slow
//! end and sparse at the fast end, mirroring how perceived change compresses
//! with rate. Alongside the bank, a small ring keeps the highest-norm tokens
//! of each recent frame verbatim so reconstruction can overwrite its blurriest
//! spots with exact values.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{ConfigError, MemoryError};
use crate::frame::FrameFeature;

/// Angular frequencies (radians/step) for `k` geometrically spaced bands
/// covering `[f_min, f_max]` cycles/step inclusive. One band degenerates to
/// `f_min`.
pub fn band_frequencies(k: usize, f_min: f64, f_max: f64) -> Result<Vec<f64>, ConfigError> {
    if k == 0 {
        return Err(ConfigError::new("bands", "must be at least 1"));
    }
    if !f_min.is_finite() || f_min <= 0.0 {
        return Err(ConfigError::new("f_min", "must be positive"));
    }
    if !f_max.is_finite() || f_max < f_min {
        return Err(ConfigError::new("f_max", "must be at least f_min"));
    }
    if f_max > 0.5 {
        return Err(ConfigError::new(
            "f_max",
            "must not exceed 0.5 cycles/step",
        ));
    }
    if k == 1 {
        return Ok(vec![TAU * f_min]);
    }
    let ratio = f_max / f_min;
    Ok((0..k)
        .map(|i| TAU * f_min * ratio.powf(i as f64 / (k - 1) as f64))
        .collect())
}

// ---------------------------------------------------------------------------
// Coefficient bank
// ---------------------------------------------------------------------------

/// The coefficient bank: `K * S * D` complex accumulators plus the decay and
/// band layout that define them.
#[derive(Clone, Debug)]
pub struct FrequencyBank {
    omega: Vec<f64>,
    gamma: f64,
    s: usize,
    d: usize,
    /// Band-major, then row-major within a band.
    coeff: Vec<Complex64>,
    last_t: Option<u64>,
    ops: u64,
}

impl FrequencyBank {
    pub fn new(
        bands: usize,
        f_min: f64,
        f_max: f64,
        gamma: f64,
        s: usize,
        d: usize,
    ) -> Result<Self, ConfigError> {
        let omega = band_frequencies(bands, f_min, f_max)?;
        if !gamma.is_finite() || gamma <= 0.0 || gamma >= 1.0 {
            return Err(ConfigError::new("gamma", "must lie strictly in (0, 1)"));
        }
        if s == 0 || d == 0 {
            return Err(ConfigError::new("shape", "S and D must be at least 1"));
        }
        Ok(FrequencyBank {
            omega,
            gamma,
            s,
            d,
            coeff: vec![Complex64::new(0.0, 0.0); bands * s * d],
            last_t: None,
            ops: 0,
        })
    }

    /// Folds one frame in. Steps must advance strictly; the decay exponent is
    /// the elapsed step count, so skipping steps decays exactly as if the
    /// missing steps had carried empty frames.
    pub fn update(&mut self, frame: &FrameFeature) -> Result<(), MemoryError> {
        let (s, d) = frame.shape();
        if (s, d) != (self.s, self.d) {
            return Err(MemoryError::ShapeMismatch {
                want_s: self.s,
                want_d: self.d,
                got_s: s,
                got_d: d,
            });
        }
        let t = frame.t();
        let decay = match self.last_t {
            Some(last) if t <= last => {
                return Err(MemoryError::NonMonotoneStep { last, got: t });
            }
            Some(last) => self.gamma.powf((t - last) as f64),
            None => 1.0,
        };
        let n = self.s * self.d;
        let x = frame.values();
        for (k, &omega) in self.omega.iter().enumerate() {
            // Reduce the phase before trig so long streams keep full precision.
            let phase = (omega * t as f64).rem_euclid(TAU);
            let twiddle = Complex64::new(phase.cos(), -phase.sin());
            self.ops += 1;
            let block = &mut self.coeff[k * n..(k + 1) * n];
            for (c, &v) in block.iter_mut().zip(x) {
                *c = *c * decay + twiddle * v;
                self.ops += 1;
            }
        }
        self.last_t = Some(t);
        Ok(())
    }

    pub fn bands(&self) -> usize {
        self.omega.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omega
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.s, self.d)
    }

    /// Step of the most recently assimilated frame, if any.
    pub fn last_t(&self) -> Option<u64> {
        self.last_t
    }

    pub fn is_empty(&self) -> bool {
        self.last_t.is_none()
    }

    /// Band-major coefficient view (for export and inspection).
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeff
    }

    /// Cumulative count of coefficient updates; the delta per `update` call
    /// is a fixed function of (K, S, D), which is what makes the tier O(1)
    /// per step.
    pub fn op_count(&self) -> u64 {
        self.ops
    }

    pub(crate) fn restore(&mut self, coeff: Vec<Complex64>, last_t: Option<u64>, ops: u64) {
        debug_assert_eq!(coeff.len(), self.coeff.len());
        self.coeff = coeff;
        self.last_t = last_t;
        self.ops = ops;
    }
}

// ---------------------------------------------------------------------------
// Salient residuals
// ---------------------------------------------------------------------------

/// Exactly-kept tokens of one frame: the `ceil(ratio * S)` largest by L2 norm.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualEntry {
    pub t: u64,
    /// Spatial indices of the kept tokens, ascending.
    pub indices: Vec<usize>,
    /// Kept token rows, `indices.len() * D`, aligned with `indices`.
    pub tokens: Vec<f64>,
    /// L2 norm per kept token, aligned with `indices`.
    pub norms: Vec<f64>,
}

/// Picks the tokens to keep verbatim. Ties in norm break toward the lower
/// spatial index; the result lists indices in ascending order.
pub fn select_residual(frame: &FrameFeature, ratio: f64) -> ResidualEntry {
    let (s, d) = frame.shape();
    let m = ((ratio * s as f64).ceil() as usize).clamp(1, s);
    let norms: Vec<f64> = (0..s)
        .map(|i| frame.token(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| {
        norms[b]
            .partial_cmp(&norms[a])
            .expect("norms are finite")
            .then(a.cmp(&b))
    });
    let mut keep: Vec<usize> = order[..m].to_vec();
    keep.sort_unstable();
    let mut tokens = Vec::with_capacity(m * d);
    for &i in &keep {
        tokens.extend_from_slice(frame.token(i));
    }
    let kept_norms = keep.iter().map(|&i| norms[i]).collect();
    ResidualEntry {
        t: frame.t(),
        indices: keep,
        tokens,
        norms: kept_norms,
    }
}

/// Ring of recent residual entries; storing into a full ring drops the oldest.
#[derive(Clone, Debug)]
pub struct ResidualBuffer {
    entries: VecDeque<ResidualEntry>,
    capacity: usize,
}

impl ResidualBuffer {
    pub fn new(capacity: usize) -> Result<Self, ConfigError> {
        if capacity == 0 {
            return Err(ConfigError::new("mfm_capacity", "must be at least 1"));
        }
        Ok(ResidualBuffer {
            entries: VecDeque::with_capacity(capacity + 1),
            capacity,
        })
    }

    /// Appends an entry (steps must advance strictly), returning the evicted
    /// oldest entry when the ring was full.
    pub fn store(&mut self, entry: ResidualEntry) -> Result<Option<ResidualEntry>, MemoryError> {
        if let Some(back) = self.entries.back() {
            if entry.t <= back.t {
                return Err(MemoryError::NonMonotoneStep {
                    last: back.t,
                    got: entry.t,
                });
            }
        }
        self.entries.push_back(entry);
        if self.entries.len() > self.capacity {
            Ok(self.entries.pop_front())
        } else {
            Ok(None)
        }
    }

    /// Entry stored for exactly step `t`, if still live.
    pub fn get(&self, t: u64) -> Option<&ResidualEntry> {
        self.entries.iter().find(|e| e.t == t)
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &ResidualEntry> + ExactSizeIterator {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub(crate) fn restore(&mut self, entries: Vec<ResidualEntry>) {
        self.entries = entries.into();
    }
}

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

/// A re-rendered frame. `frame.t()` is the query step; `residual_applied`
/// records whether exact tokens overwrote part of the inverse transform.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructedFrame {
    pub frame: FrameFeature,
    pub residual_applied: bool,
}

impl ReconstructedFrame {
    pub fn tau(&self) -> u64 {
        self.frame.t()
    }
}

/// Re-renders step `tau` from the bank, then overwrites any tokens held
/// verbatim for that exact step.
pub fn reconstruct(
    bank: &FrequencyBank,
    residuals: &ResidualBuffer,
    tau: u64,
) -> Result<ReconstructedFrame, MemoryError> {
    let last_t = bank.last_t.ok_or(MemoryError::EmptyBank)?;
    if tau > last_t {
        return Err(MemoryError::TauOutOfRange { tau, last_t });
    }
    let n = bank.s * bank.d;
    let mut data = vec![0.0f64; n];
    for (k, &omega) in bank.omega.iter().enumerate() {
        let phase = (omega * tau as f64).rem_euclid(TAU);
        let (sin, cos) = phase.sin_cos();
        let block = &bank.coeff[k * n..(k + 1) * n];
        for (acc, c) in data.iter_mut().zip(block) {
            // Re(C * e^(+j*phase))
            *acc += c.re * cos - c.im * sin;
        }
    }
    let scale = 1.0 / bank.bands() as f64;
    for v in &mut data {
        *v *= scale;
    }
    let mut residual_applied = false;
    if let Some(entry) = residuals.get(tau) {
        for (j, &s_idx) in entry.indices.iter().enumerate() {
            let src = &entry.tokens[j * bank.d..(j + 1) * bank.d];
            data[s_idx * bank.d..(s_idx + 1) * bank.d].copy_from_slice(src);
        }
        residual_applied = true;
    }
    let frame = FrameFeature::new(tau, bank.s, bank.d, data)
        .expect("reconstruction of finite coefficients is finite");
    Ok(ReconstructedFrame {
        frame,
        residual_applied,
    })
}

/// The gist tier's contribution to a memory snapshot: up to `slots`
/// reconstructions, prioritizing steps that still have verbatim residuals
/// (newest first) and padding with steps spaced densely near the present and
/// sparsely into the past. Results are deduplicated and ordered by ascending
/// step.
pub fn memory_view(
    bank: &FrequencyBank,
    residuals: &ResidualBuffer,
    slots: usize,
) -> Result<Vec<ReconstructedFrame>, MemoryError> {
    let last_t = bank.last_t.ok_or(MemoryError::EmptyBank)?;
    let history = last_t + 1;
    let want = (slots as u64).min(history) as usize;
    let mut targets = BTreeSet::new();
    for entry in residuals.iter().rev() {
        if targets.len() == want {
            break;
        }
        targets.insert(entry.t);
    }
    if targets.len() < want {
        for delta in log_spaced_deltas(last_t, want) {
            if targets.len() == want {
                break;
            }
            targets.insert(last_t - delta);
        }
    }
    // Rounding collisions can leave gaps; fill from the present backward.
    let mut tau = last_t;
    while targets.len() < want {
        targets.insert(tau);
        if tau == 0 {
            break;
        }
        tau -= 1;
    }
    targets
        .into_iter()
        .map(|tau| reconstruct(bank, residuals, tau))
        .collect()
}

// `n` offsets back from the present, log-spaced over [0, last_t]: dense near
// 0 (recent), sparse toward last_t (old).
fn log_spaced_deltas(last_t: u64, n: usize) -> Vec<u64> {
    if n <= 1 {
        return vec![0];
    }
    let span = (last_t + 1) as f64;
    (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64;
            (span.powf(u) - 1.0).round().min(last_t as f64) as u64
        })
        .collect()
}
