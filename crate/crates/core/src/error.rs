//! Error types, one enum per concern.

use thiserror::Error;

/// Frame construction failures.
#[derive(Debug, Error, PartialEq)]
pub enum FrameError {
    #[error("frame shape must be at least 1x1, got {s}x{d}")]
    EmptyShape { s: usize, d: usize },
    #[error("frame data length {len} does not match shape {s}x{d}")]
    DataLength { len: usize, s: usize, d: usize },
    #[error("non-finite value at token {s}, dim {d}")]
    NonFinite { s: usize, d: usize },
}

/// Stream decode/encode failures.
#[derive(Debug, Error)]
pub enum StreamError {
    #[error("bad magic {found:?}, expected \"FFS1\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported stream version {found}, expected {expected}")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("truncated header: got {got} bytes, need {need}")]
    TruncatedHeader { got: usize, need: usize },
    #[error("truncated frame at step {t}: got {got} bytes, need {need}")]
    TruncatedFrame { t: u64, got: usize, need: usize },
    #[error("non-finite value in frame at step {t} (token {s}, dim {d})")]
    NonFinite { t: u64, s: usize, d: usize },
    #[error("frame shape {got_s}x{got_d} does not match stream header {want_s}x{want_d}")]
    ShapeMismatch {
        want_s: usize,
        want_d: usize,
        got_s: usize,
        got_d: usize,
    },
    #[error("non-consecutive step: got {got}, expected {expected}")]
    NonConsecutiveStep { expected: u64, got: u64 },
    #[error("invalid stream shape {s}x{d}")]
    InvalidShape { s: u64, d: u64 },
    #[error("malformed jsonl line {line}: {reason}")]
    MalformedJsonl { line: u64, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Memory-tier operation failures (window, gist, episodic store, engine).
#[derive(Debug, Error, PartialEq)]
pub enum MemoryError {
    #[error("non-consecutive step: got {got}, expected {expected}")]
    NonConsecutiveStep { expected: u64, got: u64 },
    #[error("step {got} does not advance past {last}")]
    NonMonotoneStep { last: u64, got: u64 },
    #[error("frame shape {got_s}x{got_d} does not match memory shape {want_s}x{want_d}")]
    ShapeMismatch {
        want_s: usize,
        want_d: usize,
        got_s: usize,
        got_d: usize,
    },
    #[error("pooled dimension {got} does not match memory dimension {want}")]
    DimMismatch { want: usize, got: usize },
    #[error("frequency bank holds no frames yet")]
    EmptyBank,
    #[error("query step {tau} is beyond the last assimilated step {last_t}")]
    TauOutOfRange { tau: u64, last_t: u64 },
    #[error("consolidation requires more than {capacity} episodes, have {len}")]
    CalledUnderBudget { len: usize, capacity: usize },
}

/// Configuration validation failures, keyed by the offending field.
#[derive(Debug, Error, PartialEq)]
#[error("invalid config: {field} {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError {
            field,
            reason: reason.into(),
        }
    }
}

/// State export/import failures.
#[derive(Debug, Error)]
pub enum StateError {
    #[error("bad state magic {found:?}, expected \"FMS1\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported state version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("config fingerprint mismatch: stored {stored}, recomputed {recomputed}")]
    FingerprintMismatch { stored: String, recomputed: String },
    #[error("corrupt state file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
