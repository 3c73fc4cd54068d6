//! Online episodic memory.
//!
//! Evicted frames are pooled to one vector each and compared to their
//! predecessor by cosine similarity. A drop below `theta_event` closes the
//! running episode and opens a new one (a score exactly at the threshold
//! extends). Closed episodes keep:
//!
//! - a count-weighted centroid of their pooled frames,
//! - thumbnails subsampled at a density that *falls* as episodes grow —
//!   `rho(N) = clamp(4/N, rho_min, rho_max)` — so long uneventful stretches
//!   compress hard while short events stay nearly verbatim.
//!
//! When the episode budget overflows, the most similar adjacent pair of
//! episodes merges (count-weighted centroid, thumbnails re-subsampled at the
//! merged density). If nothing clears `theta_merge`, the default policy
//! merges the best pair anyway to hold the budget strictly; FIFO eviction of
//! the oldest episode is available as an alternative.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, MemoryError};
use crate::frame::FrameFeature;

/// What to do when the budget overflows and no adjacent pair clears
/// `theta_merge`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeFallback {
    /// Merge the highest-similarity adjacent pair anyway (strict budget).
    Merge,
    /// Evict the oldest episode instead (gives up frame conservation).
    Fifo,
}

/// Episodic-tier knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StmParams {
    pub theta_event: f64,
    pub theta_merge: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub capacity: usize,
    pub fallback: MergeFallback,
}

impl StmParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.theta_event.is_finite() || self.theta_event.abs() > 1.0 {
            return Err(ConfigError::new("theta_event", "must lie in [-1, 1]"));
        }
        if !self.theta_merge.is_finite() || self.theta_merge.abs() > 1.0 {
            return Err(ConfigError::new("theta_merge", "must lie in [-1, 1]"));
        }
        if !self.rho_min.is_finite() || self.rho_min <= 0.0 || self.rho_min > 1.0 {
            return Err(ConfigError::new("rho_min", "must lie in (0, 1]"));
        }
        if !self.rho_max.is_finite() || self.rho_max < self.rho_min || self.rho_max > 1.0 {
            return Err(ConfigError::new("rho_max", "must lie in [rho_min, 1]"));
        }
        if self.capacity == 0 {
            return Err(ConfigError::new("stm_capacity", "must be at least 1"));
        }
        Ok(())
    }
}

/// Mean over a frame's tokens: one D-vector per frame.
pub fn pool_frame(frame: &FrameFeature) -> Vec<f64> {
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

/// Cosine similarity; a zero vector on either side scores 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    cosine_checked(a, b).0
}

// Returns (score, hit_zero_vector).
fn cosine_checked(a: &[f64], b: &[f64]) -> (f64, bool) {
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

/// Thumbnail density for an episode of `n` frames: `clamp(4/n, rho_min,
/// rho_max)`. Short episodes keep the max density; long ones bottom out at
/// the min.
pub fn sampling_rate(n: u64, rho_min: f64, rho_max: f64) -> f64 {
    (4.0 / n as f64).clamp(rho_min, rho_max)
}

/// Thumbnail count an episode of `n` frames aims for at density `rho`.
pub fn thumbnail_target(n: u64, rho: f64) -> usize {
    ((rho * n as f64).round() as usize).max(1)
}

// Uniform-stride pick of m out of frames.len(), indices floor(i*len/m).
fn subsample(frames: &[FrameFeature], m: usize) -> Vec<FrameFeature> {
    let len = frames.len();
    debug_assert!(m >= 1 && m <= len);
    (0..m).map(|i| frames[i * len / m].clone()).collect()
}

/// Thumbnails for a freshly closed episode.
pub fn compress_episode(frames: &[FrameFeature], rho: f64) -> Vec<FrameFeature> {
    let m = thumbnail_target(frames.len() as u64, rho).min(frames.len());
    subsample(frames, m)
}

/// A closed episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub start_t: u64,
    pub end_t: u64,
    /// Frames the episode covers, including everything absorbed by merges.
    pub frame_count: u64,
    /// Count-weighted mean of pooled frame vectors.
    pub centroid: Vec<f64>,
    /// Subsampled original frames, ascending step.
    pub thumbnails: Vec<FrameFeature>,
    /// Merge operations in this episode's lineage.
    pub merged_from: u32,
}

/// What one ingested frame did to the episode structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IngestEvent {
    /// First frame ever: opened the initial episode.
    Opened,
    /// Similarity held; the active episode grew.
    Extended,
    /// Similarity dropped; the active episode closed and a new one opened.
    ClosedAndOpened,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IngestReport {
    pub event: IngestEvent,
    /// Merges performed by consolidation in the same ingest, if any.
    pub merges: usize,
}

/// The episodic store: bounded closed episodes plus the open accumulator.
#[derive(Clone, Debug)]
pub struct StmState {
    params: StmParams,
    d: usize,
    episodes: Vec<Episode>,
    active: Vec<FrameFeature>,
    active_pooled_sum: Vec<f64>,
    prev_pooled: Option<Vec<f64>>,
    last_t: Option<u64>,
    total_ingested: u64,
    zero_score_events: u64,
    cos_evals: u64,
}

impl StmState {
    pub fn new(params: StmParams, d: usize) -> Result<Self, ConfigError> {
        params.validate()?;
        if d == 0 {
            return Err(ConfigError::new("shape", "D must be at least 1"));
        }
        Ok(StmState {
            params,
            d,
            episodes: Vec::new(),
            active: Vec::new(),
            active_pooled_sum: vec![0.0; d],
            prev_pooled: None,
            last_t: None,
            total_ingested: 0,
            zero_score_events: 0,
            cos_evals: 0,
        })
    }

    /// Routes one frame into the episode structure.
    pub fn ingest(&mut self, frame: FrameFeature) -> Result<IngestReport, MemoryError> {
        if frame.dim() != self.d {
            return Err(MemoryError::DimMismatch {
                want: self.d,
                got: frame.dim(),
            });
        }
        if let Some(last) = self.last_t {
            if frame.t() <= last {
                return Err(MemoryError::NonMonotoneStep {
                    last,
                    got: frame.t(),
                });
            }
        }
        let pooled = pool_frame(&frame);
        let report = match &self.prev_pooled {
            None => {
                self.open_with(frame, &pooled);
                IngestReport {
                    event: IngestEvent::Opened,
                    merges: 0,
                }
            }
            Some(prev) => {
                let (score, zero) = cosine_checked(prev, &pooled);
                self.cos_evals += 1;
                if zero {
                    self.zero_score_events += 1;
                }
                if score < self.params.theta_event {
                    self.close_active();
                    let merges = if self.episodes.len() > self.params.capacity {
                        self.consolidate()
                            .expect("over budget right after closing")
                    } else {
                        0
                    };
                    self.open_with(frame, &pooled);
                    IngestReport {
                        event: IngestEvent::ClosedAndOpened,
                        merges,
                    }
                } else {
                    self.active.push(frame);
                    for (acc, v) in self.active_pooled_sum.iter_mut().zip(&pooled) {
                        *acc += v;
                    }
                    IngestReport {
                        event: IngestEvent::Extended,
                        merges: 0,
                    }
                }
            }
        };
        self.last_t = Some(self.active.last().expect("active never empty here").t());
        self.prev_pooled = Some(pooled);
        self.total_ingested += 1;
        Ok(report)
    }

    fn open_with(&mut self, frame: FrameFeature, pooled: &[f64]) {
        self.active = vec![frame];
        self.active_pooled_sum.copy_from_slice(pooled);
    }

    fn close_active(&mut self) {
        let frames = std::mem::take(&mut self.active);
        let n = frames.len() as u64;
        let inv = 1.0 / n as f64;
        let centroid: Vec<f64> = self.active_pooled_sum.iter().map(|v| v * inv).collect();
        let rho = sampling_rate(n, self.params.rho_min, self.params.rho_max);
        let thumbnails = compress_episode(&frames, rho);
        self.episodes.push(Episode {
            start_t: frames[0].t(),
            end_t: frames[n as usize - 1].t(),
            frame_count: n,
            centroid,
            thumbnails,
            merged_from: 0,
        });
        self.active_pooled_sum = vec![0.0; self.d];
    }

    /// Shrinks the closed-episode list back under the budget. Each pass
    /// merges the most similar adjacent pair (ties toward the older pair);
    /// below-threshold passes follow the configured fallback.
    pub fn consolidate(&mut self) -> Result<usize, MemoryError> {
        if self.episodes.len() <= self.params.capacity {
            return Err(MemoryError::CalledUnderBudget {
                len: self.episodes.len(),
                capacity: self.params.capacity,
            });
        }
        let mut merges = 0;
        while self.episodes.len() > self.params.capacity {
            let mut best_i = 0;
            let mut best_sim = f64::NEG_INFINITY;
            for i in 0..self.episodes.len() - 1 {
                let sim = cosine(&self.episodes[i].centroid, &self.episodes[i + 1].centroid);
                self.cos_evals += 1;
                if sim > best_sim {
                    best_sim = sim;
                    best_i = i;
                }
            }
            if best_sim > self.params.theta_merge || self.params.fallback == MergeFallback::Merge {
                self.merge_pair(best_i);
                merges += 1;
            } else {
                self.episodes.remove(0);
            }
        }
        Ok(merges)
    }

    fn merge_pair(&mut self, i: usize) {
        let b = self.episodes.remove(i + 1);
        let a = &mut self.episodes[i];
        let n = a.frame_count + b.frame_count;
        let wa = a.frame_count as f64 / n as f64;
        let wb = b.frame_count as f64 / n as f64;
        for (ca, cb) in a.centroid.iter_mut().zip(&b.centroid) {
            *ca = *ca * wa + cb * wb;
        }
        let mut concat = std::mem::take(&mut a.thumbnails);
        concat.extend(b.thumbnails);
        let rho = sampling_rate(n, self.params.rho_min, self.params.rho_max);
        // Originals of dropped frames are gone; the target count caps at what
        // the two thumbnail lists still hold.
        let m = thumbnail_target(n, rho).min(concat.len());
        a.thumbnails = subsample(&concat, m);
        a.end_t = b.end_t;
        a.frame_count = n;
        a.merged_from = a.merged_from + b.merged_from + 1;
    }

    pub fn params(&self) -> &StmParams {
        &self.params
    }

    pub fn episodes(&self) -> &[Episode] {
        &self.episodes
    }

    pub fn active(&self) -> &[FrameFeature] {
        &self.active
    }

    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    /// Frames ingested over the store's lifetime.
    pub fn total_ingested(&self) -> u64 {
        self.total_ingested
    }

    /// Times a zero pooled vector forced the score-0 convention.
    pub fn zero_score_events(&self) -> u64 {
        self.zero_score_events
    }

    /// Cumulative cosine evaluations (boundary checks plus consolidation
    /// scans); per-step deltas stay bounded by `1 + merges * capacity`.
    pub fn cos_evals(&self) -> u64 {
        self.cos_evals
    }

    /// Episodes oldest-first with their thumbnails, then the open
    /// accumulator verbatim.
    pub fn view(&self) -> StmView {
        StmView {
            episodes: self.episodes.clone(),
            active: self.active.clone(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn restore(
        &mut self,
        episodes: Vec<Episode>,
        active: Vec<FrameFeature>,
        active_pooled_sum: Vec<f64>,
        prev_pooled: Option<Vec<f64>>,
        last_t: Option<u64>,
        total_ingested: u64,
        zero_score_events: u64,
        cos_evals: u64,
    ) {
        self.episodes = episodes;
        self.active = active;
        self.active_pooled_sum = active_pooled_sum;
        self.prev_pooled = prev_pooled;
        self.last_t = last_t;
        self.total_ingested = total_ingested;
        self.zero_score_events = zero_score_events;
        self.cos_evals = cos_evals;
    }

    pub(crate) fn active_pooled_sum(&self) -> &[f64] {
        &self.active_pooled_sum
    }

    pub(crate) fn prev_pooled(&self) -> Option<&Vec<f64>> {
        self.prev_pooled.as_ref()
    }

    pub(crate) fn last_t(&self) -> Option<u64> {
        self.last_t
    }
}

/// The episodic tier's contribution to a memory snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct StmView {
    pub episodes: Vec<Episode>,
    pub active: Vec<FrameFeature>,
}

impl StmView {
    /// All frames in the view: thumbnails episode by episode, then the open
    /// accumulator — ascending step overall.
    pub fn frames(&self) -> impl Iterator<Item = &FrameFeature> {
        self.episodes
            .iter()
            .flat_map(|e| e.thumbnails.iter())
            .chain(self.active.iter())
    }

    pub fn frame_count(&self) -> usize {
        self.episodes
            .iter()
            .map(|e| e.thumbnails.len())
            .sum::<usize>()
            + self.active.len()
    }
}
