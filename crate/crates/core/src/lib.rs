//! Bounded-memory summarization of unbounded feature-frame streams.
//!
//! A stream of `S x D` token frames passes through three tiers with a fixed
//! footprint:
//!
//! - a FIFO [`window::SlidingWindow`] holding the most recent frames verbatim,
//! - a decayed frequency-domain gist ([`mfm`]) that assimilates every frame
//!   evicted from the window and can re-render any past step on demand, plus a
//!   small ring of exactly-kept salient tokens,
//! - an episodic tier ([`stm`]) that segments evicted frames into events online
//!   and keeps per-episode thumbnails at a density that adapts to episode length.
//!
//! [`engine::Engine`] wires the tiers together behind a single `step` call and
//! renders the combined memory as a [`engine::MemorySnapshot`]. Streams are read
//! and written in the `FFS1` wire formats ([`stream_io`]), and a running engine
//! can be exported to a state file and resumed later ([`engine::Engine::export_state`]).

pub mod config;
pub mod engine;
pub mod error;
pub mod frame;
pub mod mfm;
pub mod stm;
pub mod stream_io;
pub mod window;

pub use config::EngineConfig;
pub use engine::{Engine, MemorySnapshot, StepReport};
pub use error::{ConfigError, FrameError, MemoryError, StateError, StreamError};
pub use frame::FrameFeature;
pub use mfm::{
    band_frequencies, memory_view, reconstruct, select_residual, FrequencyBank,
    ReconstructedFrame, ResidualBuffer,
};
pub use stm::{Episode, IngestEvent, MergeFallback, StmView};
pub use window::SlidingWindow;
