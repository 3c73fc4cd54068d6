//! The assembled engine: window in front, gist and episodic tiers behind it,
//! plus snapshot rendering and resumable state export/import.
//!
//! Frames enter through [`Engine::step`]. While the sliding window still has
//! room nothing else happens; once it is full, each step evicts the oldest
//! frame, which is then assimilated in fixed order: frequency bank update,
//! residual selection and store, episodic ingest. Only evicted frames reach
//! the deeper tiers, so the window contents are always exactly the frames the
//! rest of the memory has not yet absorbed.
//!
//! State files carry a JSON metadata section followed by raw little-endian
//! f64 tensor sections, and embed a fingerprint of (config, S, D); importing
//! a file whose stored fingerprint does not match one recomputed from its own
//! config refuses, which catches both tampering and mixed-config resumes.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::EngineConfig;
use crate::error::{ConfigError, MemoryError, StateError};
use crate::frame::FrameFeature;
use crate::mfm::{
    memory_view, reconstruct, select_residual, FrequencyBank, ReconstructedFrame, ResidualBuffer,
    ResidualEntry,
};
use crate::stm::{IngestEvent, StmState, StmView};
use crate::window::SlidingWindow;

/// What one ingested frame did across the tiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepReport {
    /// Step of the frame just ingested.
    pub step: u64,
    /// Step of the frame the window evicted into the memories, if any.
    pub evicted: Option<u64>,
    /// Episodic event for the evicted frame, if one was assimilated.
    pub stm_event: Option<IngestEvent>,
    /// Episode merges performed while re-balancing the budget.
    pub merges: usize,
}

/// Full rendering of the memory at one instant: gist reconstructions,
/// episodic view, then the verbatim window — in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct MemorySnapshot {
    pub step: u64,
    pub fingerprint: String,
    pub mfm: Vec<ReconstructedFrame>,
    pub stm: StmView,
    pub short: Vec<FrameFeature>,
}

impl MemorySnapshot {
    pub fn frame_count(&self) -> usize {
        self.mfm.len() + self.stm.frame_count() + self.short.len()
    }

    /// Canonical JSON rendering. Frames appear as one flat array in section
    /// order (gist, episodic, window); keys are sorted, so equal snapshots
    /// serialize to identical bytes.
    pub fn to_json(&self, include_tokens: bool) -> String {
        let tokens_of = |f: &FrameFeature| -> serde_json::Value {
            let (s, _) = f.shape();
            json!((0..s).map(|i| f.token(i).to_vec()).collect::<Vec<_>>())
        };
        let mut frames = Vec::new();
        for r in &self.mfm {
            let mut obj = json!({
                "source": "mfm",
                "t": r.tau(),
                "residual_applied": r.residual_applied,
            });
            if include_tokens {
                obj["tokens"] = tokens_of(&r.frame);
            }
            frames.push(obj);
        }
        for (idx, episode) in self.stm.episodes.iter().enumerate() {
            for f in &episode.thumbnails {
                let mut obj = json!({
                    "source": "stm",
                    "t": f.t(),
                    "episode": idx,
                });
                if include_tokens {
                    obj["tokens"] = tokens_of(f);
                }
                frames.push(obj);
            }
        }
        for f in &self.stm.active {
            let mut obj = json!({
                "source": "stm",
                "t": f.t(),
                "episode": serde_json::Value::Null,
            });
            if include_tokens {
                obj["tokens"] = tokens_of(f);
            }
            frames.push(obj);
        }
        for f in &self.short {
            let mut obj = json!({
                "source": "short",
                "t": f.t(),
            });
            if include_tokens {
                obj["tokens"] = tokens_of(f);
            }
            frames.push(obj);
        }
        let episodes: Vec<serde_json::Value> = self
            .stm
            .episodes
            .iter()
            .map(|e| {
                json!({
                    "start_t": e.start_t,
                    "end_t": e.end_t,
                    "frame_count": e.frame_count,
                    "merged_from": e.merged_from,
                    "thumbnail_count": e.thumbnails.len(),
                    "centroid": e.centroid,
                })
            })
            .collect();
        json!({
            "step": self.step,
            "fingerprint": self.fingerprint,
            "frame_count": self.frame_count(),
            "frames": frames,
            "episodes": episodes,
        })
        .to_string()
    }
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Engine {
    config: EngineConfig,
    s: usize,
    d: usize,
    fingerprint: String,
    window: SlidingWindow,
    bank: FrequencyBank,
    residuals: ResidualBuffer,
    stm: StmState,
    steps: u64,
}

impl Engine {
    /// Builds an engine for streams of `s x d` token frames.
    pub fn new(config: EngineConfig, s: usize, d: usize) -> Result<Self, ConfigError> {
        config.validate()?;
        if s == 0 || d == 0 {
            return Err(ConfigError::new("shape", "S and D must be at least 1"));
        }
        let fingerprint = config.fingerprint(s, d);
        let window = SlidingWindow::new(config.window_len)?;
        let bank = FrequencyBank::new(config.bands, config.f_min, config.f_max, config.gamma, s, d)?;
        let residuals = ResidualBuffer::new(config.mfm_capacity)?;
        let stm = StmState::new(config.stm_params(), d)?;
        Ok(Engine {
            config,
            s,
            d,
            fingerprint,
            window,
            bank,
            residuals,
            stm,
            steps: 0,
        })
    }

    /// Ingests the next frame. Steps must arrive consecutively from 0.
    pub fn step(&mut self, frame: FrameFeature) -> Result<StepReport, MemoryError> {
        if frame.t() != self.steps {
            return Err(MemoryError::NonConsecutiveStep {
                expected: self.steps,
                got: frame.t(),
            });
        }
        let (s, d) = frame.shape();
        if (s, d) != (self.s, self.d) {
            return Err(MemoryError::ShapeMismatch {
                want_s: self.s,
                want_d: self.d,
                got_s: s,
                got_d: d,
            });
        }
        let step = frame.t();
        let mut report = StepReport {
            step,
            evicted: None,
            stm_event: None,
            merges: 0,
        };
        if let Some(old) = self.window.push(frame)? {
            self.bank.update(&old)?;
            self.residuals
                .store(select_residual(&old, self.config.residual_ratio))?;
            report.evicted = Some(old.t());
            let ingest = self.stm.ingest(old)?;
            report.stm_event = Some(ingest.event);
            report.merges = ingest.merges;
        }
        self.steps += 1;
        Ok(report)
    }

    /// Renders the whole memory. Cheap enough to call at any step; tiers that
    /// have absorbed nothing yet contribute empty sections.
    pub fn snapshot(&self) -> MemorySnapshot {
        let mfm = if self.bank.is_empty() {
            Vec::new()
        } else {
            memory_view(&self.bank, &self.residuals, self.config.mfm_slots)
                .expect("bank is non-empty")
        };
        MemorySnapshot {
            step: self.steps,
            fingerprint: self.fingerprint.clone(),
            mfm,
            stm: self.stm.view(),
            short: self.window.contents().cloned().collect(),
        }
    }

    /// Re-renders one assimilated step from the gist tier.
    pub fn reconstruct_at(&self, tau: u64) -> Result<ReconstructedFrame, MemoryError> {
        reconstruct(&self.bank, &self.residuals, tau)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Token shape `(S, D)` this engine runs against.
    pub fn shape(&self) -> (usize, usize) {
        (self.s, self.d)
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Frames ingested so far (= the next expected step).
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn window(&self) -> &SlidingWindow {
        &self.window
    }

    pub fn bank(&self) -> &FrequencyBank {
        &self.bank
    }

    pub fn residuals(&self) -> &ResidualBuffer {
        &self.residuals
    }

    pub fn stm(&self) -> &StmState {
        &self.stm
    }

    // -----------------------------------------------------------------------
    // State export / import
    // -----------------------------------------------------------------------

    /// Serializes the full engine state: `"FMS1"`, version, JSON metadata,
    /// then raw little-endian f64 tensors. The import of an export resumes
    /// bit-identically.
    pub fn export_state<W: Write>(&self, mut w: W) -> Result<(), StateError> {
        let meta = StateMeta {
            version: STATE_VERSION,
            s: self.s,
            d: self.d,
            config: self.config.clone(),
            fingerprint: self.fingerprint.clone(),
            steps: self.steps,
            mfm: MfmMeta {
                last_t: self.bank.last_t(),
                ops: self.bank.op_count(),
                residuals: self
                    .residuals
                    .iter()
                    .map(|e| ResidualMeta {
                        t: e.t,
                        indices: e.indices.clone(),
                    })
                    .collect(),
            },
            window_ts: self.window.contents().map(FrameFeature::t).collect(),
            stm: StmMeta {
                episodes: self
                    .stm
                    .episodes()
                    .iter()
                    .map(|e| EpisodeMeta {
                        start_t: e.start_t,
                        end_t: e.end_t,
                        frame_count: e.frame_count,
                        merged_from: e.merged_from,
                        thumb_ts: e.thumbnails.iter().map(FrameFeature::t).collect(),
                    })
                    .collect(),
                active_ts: self.stm.active().iter().map(FrameFeature::t).collect(),
                has_prev_pooled: self.stm.prev_pooled().is_some(),
                last_t: self.stm.last_t(),
                total_ingested: self.stm.total_ingested(),
                zero_score_events: self.stm.zero_score_events(),
                cos_evals: self.stm.cos_evals(),
            },
        };
        let json = serde_json::to_vec(&meta).expect("metadata serialization cannot fail");
        w.write_all(&STATE_MAGIC)?;
        w.write_all(&STATE_VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;

        // Tensor sections, in a fixed order the metadata fully determines.
        write_f64s(&mut w, self.bank.coefficients().iter().map(|c| c.re))?;
        write_f64s(&mut w, self.bank.coefficients().iter().map(|c| c.im))?;
        for entry in self.residuals.iter() {
            write_f64s(&mut w, entry.tokens.iter().copied())?;
            write_f64s(&mut w, entry.norms.iter().copied())?;
        }
        for f in self.window.contents() {
            write_f64s(&mut w, f.values().iter().copied())?;
        }
        for e in self.stm.episodes() {
            write_f64s(&mut w, e.centroid.iter().copied())?;
            for f in &e.thumbnails {
                write_f64s(&mut w, f.values().iter().copied())?;
            }
        }
        for f in self.stm.active() {
            write_f64s(&mut w, f.values().iter().copied())?;
        }
        write_f64s(&mut w, self.stm.active_pooled_sum().iter().copied())?;
        if let Some(prev) = self.stm.prev_pooled() {
            write_f64s(&mut w, prev.iter().copied())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rebuilds an engine from an export. Refuses unknown versions and files
    /// whose stored fingerprint does not match their own config and shape.
    pub fn import_state<R: Read>(mut r: R) -> Result<Engine, StateError> {
        let mut head = [0u8; 16];
        read_exact(&mut r, &mut head, "header")?;
        if head[0..4] != STATE_MAGIC {
            let mut found = [0u8; 4];
            found.copy_from_slice(&head[0..4]);
            return Err(StateError::BadMagic { found });
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != STATE_VERSION {
            return Err(StateError::VersionMismatch {
                found: version,
                expected: STATE_VERSION,
            });
        }
        let json_len = u64::from_le_bytes(head[8..16].try_into().unwrap());
        if json_len > 1 << 30 {
            return Err(StateError::Corrupt(format!(
                "implausible metadata length {json_len}"
            )));
        }
        let mut json = vec![0u8; json_len as usize];
        read_exact(&mut r, &mut json, "metadata")?;
        let meta: StateMeta = serde_json::from_slice(&json)
            .map_err(|e| StateError::Corrupt(format!("metadata: {e}")))?;
        if meta.version != STATE_VERSION {
            return Err(StateError::VersionMismatch {
                found: meta.version,
                expected: STATE_VERSION,
            });
        }
        let recomputed = meta.config.fingerprint(meta.s, meta.d);
        if recomputed != meta.fingerprint {
            return Err(StateError::FingerprintMismatch {
                stored: meta.fingerprint,
                recomputed,
            });
        }
        let mut engine = Engine::new(meta.config.clone(), meta.s, meta.d)?;
        let (s, d) = (meta.s, meta.d);
        let n_coeff = meta.config.bands * s * d;

        let re = read_f64s(&mut r, n_coeff, "coefficient (real)")?;
        let im = read_f64s(&mut r, n_coeff, "coefficient (imag)")?;
        let coeff = re
            .into_iter()
            .zip(im)
            .map(|(re, im)| num_complex::Complex64::new(re, im))
            .collect();
        engine.bank.restore(coeff, meta.mfm.last_t, meta.mfm.ops);

        if meta.mfm.residuals.len() > meta.config.mfm_capacity {
            return Err(StateError::Corrupt("residual ring over capacity".into()));
        }
        let mut entries = Vec::with_capacity(meta.mfm.residuals.len());
        let mut prev_t = None;
        for rm in &meta.mfm.residuals {
            if prev_t.is_some_and(|p| rm.t <= p) {
                return Err(StateError::Corrupt("residual steps out of order".into()));
            }
            prev_t = Some(rm.t);
            if rm.indices.is_empty()
                || rm.indices.windows(2).any(|w| w[0] >= w[1])
                || rm.indices.iter().any(|&i| i >= s)
            {
                return Err(StateError::Corrupt(format!(
                    "residual entry at step {} has invalid indices",
                    rm.t
                )));
            }
            let tokens = read_f64s(&mut r, rm.indices.len() * d, "residual tokens")?;
            let norms = read_f64s(&mut r, rm.indices.len(), "residual norms")?;
            entries.push(ResidualEntry {
                t: rm.t,
                indices: rm.indices.clone(),
                tokens,
                norms,
            });
        }
        engine.residuals.restore(entries);

        if meta.window_ts.len() > meta.config.window_len {
            return Err(StateError::Corrupt("window over capacity".into()));
        }
        let window_flat = read_f64s(&mut r, meta.window_ts.len() * s * d, "window")?;
        for f in frames_from(&meta.window_ts, &window_flat, s, d)? {
            let evicted = engine
                .window
                .push(f)
                .map_err(|e| StateError::Corrupt(format!("window: {e}")))?;
            if evicted.is_some() {
                return Err(StateError::Corrupt("window over capacity".into()));
            }
        }

        if meta.stm.episodes.len() > meta.config.stm_capacity {
            return Err(StateError::Corrupt("episode list over capacity".into()));
        }
        let mut episodes = Vec::with_capacity(meta.stm.episodes.len());
        for em in &meta.stm.episodes {
            if em.start_t > em.end_t || em.thumb_ts.is_empty() {
                return Err(StateError::Corrupt(format!(
                    "episode [{}, {}] is malformed",
                    em.start_t, em.end_t
                )));
            }
            let centroid = read_f64s(&mut r, d, "episode centroid")?;
            let flat = read_f64s(&mut r, em.thumb_ts.len() * s * d, "episode thumbnails")?;
            episodes.push(crate::stm::Episode {
                start_t: em.start_t,
                end_t: em.end_t,
                frame_count: em.frame_count,
                merged_from: em.merged_from,
                centroid,
                thumbnails: frames_from(&em.thumb_ts, &flat, s, d)?,
            });
        }
        let active_flat = read_f64s(&mut r, meta.stm.active_ts.len() * s * d, "active frames")?;
        let active = frames_from(&meta.stm.active_ts, &active_flat, s, d)?;
        let active_pooled_sum = read_f64s(&mut r, d, "active pooled sum")?;
        let prev_pooled = if meta.stm.has_prev_pooled {
            Some(read_f64s(&mut r, d, "previous pooled vector")?)
        } else {
            None
        };
        engine.stm.restore(
            episodes,
            active,
            active_pooled_sum,
            prev_pooled,
            meta.stm.last_t,
            meta.stm.total_ingested,
            meta.stm.zero_score_events,
            meta.stm.cos_evals,
        );

        engine.steps = meta.steps;
        let newest = engine.window.contents().last().map(FrameFeature::t);
        let consistent = match newest {
            Some(t) => meta.steps == t + 1,
            None => meta.steps == 0,
        };
        if !consistent {
            return Err(StateError::Corrupt(
                "step counter disagrees with window contents".into(),
            ));
        }

        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(StateError::Corrupt("trailing data after tensors".into()));
        }
        Ok(engine)
    }
}

pub const STATE_MAGIC: [u8; 4] = *b"FMS1";
pub const STATE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StateMeta {
    version: u32,
    s: usize,
    d: usize,
    config: EngineConfig,
    fingerprint: String,
    steps: u64,
    mfm: MfmMeta,
    window_ts: Vec<u64>,
    stm: StmMeta,
}

#[derive(Serialize, Deserialize)]
struct MfmMeta {
    last_t: Option<u64>,
    ops: u64,
    residuals: Vec<ResidualMeta>,
}

#[derive(Serialize, Deserialize)]
struct ResidualMeta {
    t: u64,
    indices: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct StmMeta {
    episodes: Vec<EpisodeMeta>,
    active_ts: Vec<u64>,
    has_prev_pooled: bool,
    last_t: Option<u64>,
    total_ingested: u64,
    zero_score_events: u64,
    cos_evals: u64,
}

#[derive(Serialize, Deserialize)]
struct EpisodeMeta {
    start_t: u64,
    end_t: u64,
    frame_count: u64,
    merged_from: u32,
    thumb_ts: Vec<u64>,
}

fn write_f64s<W: Write>(w: &mut W, values: impl Iterator<Item = f64>) -> Result<(), StateError> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s<R: Read>(r: &mut R, n: usize, what: &str) -> Result<Vec<f64>, StateError> {
    let mut buf = vec![0u8; n * 8];
    read_exact(r, &mut buf, what)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<(), StateError> {
    match r.read_exact(buf) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            Err(StateError::Corrupt(format!("truncated {what}")))
        }
        Err(e) => Err(StateError::Io(e)),
    }
}

fn frames_from(
    ts: &[u64],
    flat: &[f64],
    s: usize,
    d: usize,
) -> Result<Vec<FrameFeature>, StateError> {
    ts.iter()
        .enumerate()
        .map(|(i, &t)| {
            FrameFeature::new(t, s, d, flat[i * s * d..(i + 1) * s * d].to_vec())
                .map_err(|e| StateError::Corrupt(format!("frame at step {t}: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stm::IngestEvent;

    fn default_engine(s: usize, d: usize) -> Engine {
        Engine::new(EngineConfig::default(), s, d).unwrap()
    }

    fn wobble(seed: u64, i: usize) -> f64 {
        let x = (seed as f64 + 1.0) * 12.9898 + i as f64 * 78.233;
        (x.sin() * 43758.5453).fract() * 2.0 - 1.0
    }

    fn random_frame(t: u64, s: usize, d: usize) -> FrameFeature {
        FrameFeature::new(t, s, d, (0..s * d).map(|i| wobble(t, i)).collect()).unwrap()
    }

    #[test]
    fn warmup_steps_evict_nothing_and_snapshot_is_window_only() {
        let mut e = default_engine(2, 3);
        for t in 0..5 {
            let report = e.step(random_frame(t, 2, 3)).unwrap();
            assert_eq!(report.evicted, None);
            assert_eq!(report.stm_event, None);
        }
        let snap = e.snapshot();
        assert!(snap.mfm.is_empty());
        assert_eq!(snap.stm.frame_count(), 0);
        assert_eq!(snap.short.len(), 5);
        assert_eq!(snap.frame_count(), 5);
    }

    #[test]
    fn steps_must_be_consecutive_from_zero() {
        let mut e = default_engine(1, 1);
        let err = e.step(random_frame(3, 1, 1)).unwrap_err();
        assert_eq!(err, MemoryError::NonConsecutiveStep { expected: 0, got: 3 });
        e.step(random_frame(0, 1, 1)).unwrap();
        let err = e.step(random_frame(2, 1, 1)).unwrap_err();
        assert_eq!(err, MemoryError::NonConsecutiveStep { expected: 1, got: 2 });
    }

    #[test]
    fn eviction_routes_to_both_memories_in_order() {
        let mut e = default_engine(2, 3);
        for t in 0..6 {
            let report = e.step(random_frame(t, 2, 3)).unwrap();
            if t < 5 {
                assert_eq!(report.evicted, None);
            } else {
                assert_eq!(report.evicted, Some(0));
                assert_eq!(report.stm_event, Some(IngestEvent::Opened));
            }
        }
        assert_eq!(e.bank().last_t(), Some(0));
        assert_eq!(e.residuals().len(), 1);
        assert_eq!(e.stm().total_ingested(), 1);
    }

    #[test]
    fn budgets_hold_and_every_evicted_frame_is_accounted_for() {
        let mut e = default_engine(2, 4);
        let n = 400u64;
        for t in 0..n {
            e.step(random_frame(t, 2, 4)).unwrap();
        }
        let evicted = n - e.config().window_len as u64;
        assert_eq!(e.bank().last_t(), Some(evicted - 1));
        assert!(e.residuals().len() <= e.config().mfm_capacity);
        assert!(e.stm().episodes().len() <= e.config().stm_capacity);
        assert_eq!(e.window().len(), e.config().window_len);
        let closed: u64 = e.stm().episodes().iter().map(|ep| ep.frame_count).sum();
        assert_eq!(closed + e.stm().active_len() as u64, evicted);
        let snap = e.snapshot();
        assert_eq!(snap.mfm.len(), e.config().mfm_slots);
        // Sections are each ordered by ascending step.
        let taus: Vec<u64> = snap.mfm.iter().map(ReconstructedFrame::tau).collect();
        assert!(taus.windows(2).all(|w| w[0] < w[1]));
        let short_ts: Vec<u64> = snap.short.iter().map(FrameFeature::t).collect();
        assert_eq!(short_ts, (n - 5..n).collect::<Vec<u64>>());
    }

    #[test]
    fn snapshot_json_is_stable_and_orders_sections() {
        let mut e = default_engine(1, 2);
        for t in 0..9 {
            e.step(random_frame(t, 1, 2)).unwrap();
        }
        let a = e.snapshot().to_json(true);
        let b = e.snapshot().to_json(true);
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        let sources: Vec<&str> = v["frames"]
            .as_array()
            .unwrap()
            .iter()
            .map(|f| f["source"].as_str().unwrap())
            .collect();
        // mfm frames first, then stm, then short; no interleaving.
        let first_stm = sources.iter().position(|s| *s == "stm").unwrap();
        let first_short = sources.iter().position(|s| *s == "short").unwrap();
        assert!(sources[..first_stm].iter().all(|s| *s == "mfm"));
        assert!(sources[first_stm..first_short].iter().all(|s| *s == "stm"));
        assert!(sources[first_short..].iter().all(|s| *s == "short"));
        let without_tokens = e.snapshot().to_json(false);
        assert!(!without_tokens.contains("tokens"));
    }

    #[test]
    fn export_import_round_trips_bit_identically() {
        let mut e = default_engine(3, 4);
        for t in 0..123 {
            e.step(random_frame(t, 3, 4)).unwrap();
        }
        let mut bytes = Vec::new();
        e.export_state(&mut bytes).unwrap();
        let mut resumed = Engine::import_state(bytes.as_slice()).unwrap();
        assert_eq!(resumed.snapshot(), e.snapshot());
        // Both continue identically.
        for t in 123..200 {
            let a = e.step(random_frame(t, 3, 4)).unwrap();
            let b = resumed.step(random_frame(t, 3, 4)).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(resumed.snapshot(), e.snapshot());
        assert_eq!(
            resumed.snapshot().to_json(true),
            e.snapshot().to_json(true)
        );
    }

    #[test]
    fn import_rejects_bad_magic_and_version() {
        let mut e = default_engine(1, 1);
        e.step(random_frame(0, 1, 1)).unwrap();
        let mut bytes = Vec::new();
        e.export_state(&mut bytes).unwrap();

        let mut bad = bytes.clone();
        bad[0..4].copy_from_slice(b"XXXX");
        assert!(matches!(
            Engine::import_state(bad.as_slice()).unwrap_err(),
            StateError::BadMagic { .. }
        ));

        let mut bad = bytes.clone();
        bad[4..8].copy_from_slice(&9u32.to_le_bytes());
        assert!(matches!(
            Engine::import_state(bad.as_slice()).unwrap_err(),
            StateError::VersionMismatch {
                found: 9,
                expected: 1
            }
        ));
    }

    #[test]
    fn import_refuses_a_config_that_disagrees_with_the_fingerprint() {
        let mut e = default_engine(1, 1);
        for t in 0..8 {
            e.step(random_frame(t, 1, 1)).unwrap();
        }
        let mut bytes = Vec::new();
        e.export_state(&mut bytes).unwrap();
        // Same-length edit of the embedded config text.
        let needle = br#""gamma":0.9"#;
        let patch = br#""gamma":0.8"#;
        let pos = bytes
            .windows(needle.len())
            .position(|w| w == needle)
            .expect("config text present");
        bytes[pos..pos + patch.len()].copy_from_slice(patch);
        assert!(matches!(
            Engine::import_state(bytes.as_slice()).unwrap_err(),
            StateError::FingerprintMismatch { .. }
        ));
    }

    #[test]
    fn import_rejects_truncated_and_padded_files() {
        let mut e = default_engine(2, 2);
        for t in 0..40 {
            e.step(random_frame(t, 2, 2)).unwrap();
        }
        let mut bytes = Vec::new();
        e.export_state(&mut bytes).unwrap();

        let truncated = &bytes[..bytes.len() - 9];
        assert!(matches!(
            Engine::import_state(truncated).unwrap_err(),
            StateError::Corrupt(_)
        ));

        let mut padded = bytes.clone();
        padded.push(0);
        assert!(matches!(
            Engine::import_state(padded.as_slice()).unwrap_err(),
            StateError::Corrupt(_)
        ));
    }

    #[test]
    fn fresh_engine_exports_and_resumes() {
        let e = default_engine(2, 2);
        let mut bytes = Vec::new();
        e.export_state(&mut bytes).unwrap();
        let mut resumed = Engine::import_state(bytes.as_slice()).unwrap();
        assert_eq!(resumed.steps(), 0);
        resumed.step(random_frame(0, 2, 2)).unwrap();
    }

    #[test]
    fn reconstruct_at_reports_empty_bank_before_first_eviction() {
        let e = default_engine(1, 1);
        assert_eq!(e.reconstruct_at(0).unwrap_err(), MemoryError::EmptyBank);
    }
}
