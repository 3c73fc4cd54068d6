//! Engine configuration: defaults, validation, the flat key/value config
//! file format, and the fingerprint that guards state resumes.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ConfigError;
use crate::stm::{MergeFallback, StmParams};

/// Every tunable of the engine. Token shape (S, D) is a property of the
/// stream, not of the config; it rides along separately and is pinned by the
/// fingerprint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Frames held verbatim in the sliding window.
    pub window_len: usize,
    /// Frequency bands in the gist bank.
    pub bands: usize,
    /// Slowest band, cycles/step.
    pub f_min: f64,
    /// Fastest band, cycles/step (at most 0.5).
    pub f_max: f64,
    /// Per-step coefficient decay.
    pub gamma: f64,
    /// Fraction of tokens kept verbatim per evicted frame.
    pub residual_ratio: f64,
    /// Residual ring capacity.
    pub mfm_capacity: usize,
    /// Reconstruction slots in a memory snapshot.
    pub mfm_slots: usize,
    /// Cosine threshold below which an episode boundary fires.
    pub theta_event: f64,
    /// Cosine threshold adjacent episodes must clear to merge preferentially.
    pub theta_merge: f64,
    /// Thumbnail density floor.
    pub rho_min: f64,
    /// Thumbnail density ceiling.
    pub rho_max: f64,
    /// Closed-episode budget.
    pub stm_capacity: usize,
    /// Over-budget behavior when no pair clears `theta_merge`.
    pub fallback: MergeFallback,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            window_len: 5,
            bands: 16,
            f_min: 0.01,
            f_max: 0.5,
            gamma: 0.9,
            residual_ratio: 0.10,
            mfm_capacity: 15,
            mfm_slots: 15,
            theta_event: 0.4,
            theta_merge: 0.3,
            rho_min: 1.0 / 16.0,
            rho_max: 0.25,
            stm_capacity: 40,
            fallback: MergeFallback::Merge,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.window_len == 0 {
            return Err(ConfigError::new("window_len", "must be at least 1"));
        }
        // Band layout checks (bands, f_min, f_max) live with the bank.
        crate::mfm::band_frequencies(self.bands, self.f_min, self.f_max)?;
        if !self.gamma.is_finite() || self.gamma <= 0.0 || self.gamma >= 1.0 {
            return Err(ConfigError::new("gamma", "must lie strictly in (0, 1)"));
        }
        if !self.residual_ratio.is_finite()
            || self.residual_ratio <= 0.0
            || self.residual_ratio > 1.0
        {
            return Err(ConfigError::new("residual_ratio", "must lie in (0, 1]"));
        }
        if self.mfm_capacity == 0 {
            return Err(ConfigError::new("mfm_capacity", "must be at least 1"));
        }
        if self.mfm_slots == 0 {
            return Err(ConfigError::new("mfm_slots", "must be at least 1"));
        }
        self.stm_params().validate()
    }

    pub fn stm_params(&self) -> StmParams {
        StmParams {
            theta_event: self.theta_event,
            theta_merge: self.theta_merge,
            rho_min: self.rho_min,
            rho_max: self.rho_max,
            capacity: self.stm_capacity,
            fallback: self.fallback,
        }
    }

    /// Hash of the config plus the token shape it runs against. Stored in
    /// exports; resuming under a different config or shape is refused.
    pub fn fingerprint(&self, s: usize, d: usize) -> String {
        let canonical =
            serde_json::to_string(self).expect("config serialization cannot fail");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hasher.update(format!("|S={s}|D={d}").as_bytes());
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    /// Flat `key = value` rendering, one field per line, parseable by
    /// [`ConfigOverlay::parse`].
    pub fn to_flat_text(&self) -> String {
        let fb = match self.fallback {
            MergeFallback::Merge => "merge",
            MergeFallback::Fifo => "fifo",
        };
        format!(
            "window_len = {}\nbands = {}\nf_min = {}\nf_max = {}\ngamma = {}\n\
             residual_ratio = {}\nmfm_capacity = {}\nmfm_slots = {}\n\
             theta_event = {}\ntheta_merge = {}\nrho_min = {}\nrho_max = {}\n\
             stm_capacity = {}\nfallback = {}\n",
            self.window_len,
            self.bands,
            self.f_min,
            self.f_max,
            self.gamma,
            self.residual_ratio,
            self.mfm_capacity,
            self.mfm_slots,
            self.theta_event,
            self.theta_merge,
            self.rho_min,
            self.rho_max,
            self.stm_capacity,
            fb,
        )
    }
}

/// A partial config: only the fields a source (file or flags) actually set.
/// Later sources apply over earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigOverlay {
    pub window_len: Option<usize>,
    pub bands: Option<usize>,
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    pub gamma: Option<f64>,
    pub residual_ratio: Option<f64>,
    pub mfm_capacity: Option<usize>,
    pub mfm_slots: Option<usize>,
    pub theta_event: Option<f64>,
    pub theta_merge: Option<f64>,
    pub rho_min: Option<f64>,
    pub rho_max: Option<f64>,
    pub stm_capacity: Option<usize>,
    pub fallback: Option<MergeFallback>,
}

impl ConfigOverlay {
    /// Parses the flat config file format: one `key = value` per line, `#`
    /// comments, blank lines ignored. Keys mirror [`EngineConfig`] fields.
    pub fn parse(text: &str) -> Result<ConfigOverlay, ConfigError> {
        let mut overlay = ConfigOverlay::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::new(
                    "config_file",
                    format!("line {}: expected 'key = value'", lineno + 1),
                )
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "window_len" => overlay.window_len = Some(parse_usize("window_len", value)?),
                "bands" => overlay.bands = Some(parse_usize("bands", value)?),
                "f_min" => overlay.f_min = Some(parse_f64("f_min", value)?),
                "f_max" => overlay.f_max = Some(parse_f64("f_max", value)?),
                "gamma" => overlay.gamma = Some(parse_f64("gamma", value)?),
                "residual_ratio" => {
                    overlay.residual_ratio = Some(parse_f64("residual_ratio", value)?)
                }
                "mfm_capacity" => overlay.mfm_capacity = Some(parse_usize("mfm_capacity", value)?),
                "mfm_slots" => overlay.mfm_slots = Some(parse_usize("mfm_slots", value)?),
                "theta_event" => overlay.theta_event = Some(parse_f64("theta_event", value)?),
                "theta_merge" => overlay.theta_merge = Some(parse_f64("theta_merge", value)?),
                "rho_min" => overlay.rho_min = Some(parse_f64("rho_min", value)?),
                "rho_max" => overlay.rho_max = Some(parse_f64("rho_max", value)?),
                "stm_capacity" => overlay.stm_capacity = Some(parse_usize("stm_capacity", value)?),
                "fallback" => {
                    overlay.fallback = Some(match value {
                        "merge" => MergeFallback::Merge,
                        "fifo" => MergeFallback::Fifo,
                        other => {
                            return Err(ConfigError::new(
                                "fallback",
                                format!("expected 'merge' or 'fifo', got '{other}'"),
                            ))
                        }
                    })
                }
                other => {
                    return Err(ConfigError::new(
                        "config_file",
                        format!("line {}: unknown key '{other}'", lineno + 1),
                    ))
                }
            }
        }
        Ok(overlay)
    }

    /// Writes the set fields onto a config.
    pub fn apply(&self, config: &mut EngineConfig) {
        macro_rules! put {
            ($field:ident) => {
                if let Some(v) = self.$field {
                    config.$field = v;
                }
            };
        }
        put!(window_len);
        put!(bands);
        put!(f_min);
        put!(f_max);
        put!(gamma);
        put!(residual_ratio);
        put!(mfm_capacity);
        put!(mfm_slots);
        put!(theta_event);
        put!(theta_merge);
        put!(rho_min);
        put!(rho_max);
        put!(stm_capacity);
        put!(fallback);
    }
}

fn parse_usize(field: &'static str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::new(field, format!("expected a non-negative integer, got '{value}'")))
}

fn parse_f64(field: &'static str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::new(field, format!("expected a number, got '{value}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_table() {
        let c = EngineConfig::default();
        assert_eq!(c.window_len, 5);
        assert_eq!(c.bands, 16);
        assert_eq!(c.f_min, 0.01);
        assert_eq!(c.f_max, 0.5);
        assert_eq!(c.gamma, 0.9);
        assert_eq!(c.residual_ratio, 0.10);
        assert_eq!(c.mfm_capacity, 15);
        assert_eq!(c.mfm_slots, 15);
        assert_eq!(c.theta_event, 0.4);
        assert_eq!(c.theta_merge, 0.3);
        assert_eq!(c.rho_min, 0.0625);
        assert_eq!(c.rho_max, 0.25);
        assert_eq!(c.stm_capacity, 40);
        assert_eq!(c.fallback, MergeFallback::Merge);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn validation_names_the_offending_field() {
        let mut c = EngineConfig::default();
        c.gamma = 1.0;
        assert_eq!(c.validate().unwrap_err().field, "gamma");
        let mut c = EngineConfig::default();
        c.f_min = 0.0;
        assert_eq!(c.validate().unwrap_err().field, "f_min");
        let mut c = EngineConfig::default();
        c.window_len = 0;
        assert_eq!(c.validate().unwrap_err().field, "window_len");
        let mut c = EngineConfig::default();
        c.rho_min = 0.5; // above rho_max
        assert_eq!(c.validate().unwrap_err().field, "rho_max");
        let mut c = EngineConfig::default();
        c.residual_ratio = 0.0;
        assert_eq!(c.validate().unwrap_err().field, "residual_ratio");
    }

    #[test]
    fn flat_text_round_trips_exactly() {
        let mut c = EngineConfig::default();
        c.gamma = 0.85;
        c.bands = 7;
        c.fallback = MergeFallback::Fifo;
        let text = c.to_flat_text();
        let overlay = ConfigOverlay::parse(&text).unwrap();
        let mut rebuilt = EngineConfig::default();
        overlay.apply(&mut rebuilt);
        assert_eq!(rebuilt, c);
    }

    #[test]
    fn defaults_render_verbatim() {
        let text = EngineConfig::default().to_flat_text();
        assert!(text.contains("window_len = 5\n"));
        assert!(text.contains("gamma = 0.9\n"));
        assert!(text.contains("f_min = 0.01\n"));
        assert!(text.contains("rho_min = 0.0625\n"));
        assert!(text.contains("rho_max = 0.25\n"));
        assert!(text.contains("stm_capacity = 40\n"));
        assert!(text.contains("fallback = merge\n"));
    }

    #[test]
    fn parse_skips_comments_and_blank_lines() {
        let overlay = ConfigOverlay::parse(
            "# tuned down\n\ngamma = 0.8\n  theta_event=0.5  \n",
        )
        .unwrap();
        assert_eq!(overlay.gamma, Some(0.8));
        assert_eq!(overlay.theta_event, Some(0.5));
        assert_eq!(overlay.window_len, None);
    }

    #[test]
    fn parse_rejects_unknown_keys_and_bad_values() {
        let err = ConfigOverlay::parse("windowlen = 5\n").unwrap_err();
        assert_eq!(err.field, "config_file");
        let err = ConfigOverlay::parse("gamma = fast\n").unwrap_err();
        assert_eq!(err.field, "gamma");
        let err = ConfigOverlay::parse("gamma 0.8\n").unwrap_err();
        assert_eq!(err.field, "config_file");
        let err = ConfigOverlay::parse("fallback = both\n").unwrap_err();
        assert_eq!(err.field, "fallback");
    }

    #[test]
    fn later_overlays_win() {
        let mut c = EngineConfig::default();
        let file = ConfigOverlay {
            gamma: Some(0.8),
            window_len: Some(7),
            ..Default::default()
        };
        let flags = ConfigOverlay {
            gamma: Some(0.7),
            ..Default::default()
        };
        file.apply(&mut c);
        flags.apply(&mut c);
        assert_eq!(c.gamma, 0.7);
        assert_eq!(c.window_len, 7);
    }

    #[test]
    fn fingerprint_tracks_config_and_shape() {
        let c = EngineConfig::default();
        let base = c.fingerprint(4, 16);
        assert_eq!(base.len(), 64);
        assert_eq!(base, c.fingerprint(4, 16));
        assert_ne!(base, c.fingerprint(4, 17));
        assert_ne!(base, c.fingerprint(5, 16));
        let mut c2 = c.clone();
        c2.gamma = 0.8999;
        assert_ne!(base, c2.fingerprint(4, 16));
    }
}
