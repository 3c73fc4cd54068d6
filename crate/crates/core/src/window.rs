//! Verbatim FIFO over the most recent frames (the short-term section).

use std::collections::VecDeque;

use crate::error::{ConfigError, MemoryError};
use crate::frame::FrameFeature;

/// Fixed-capacity FIFO. Pushing into a full window evicts and returns the
/// oldest frame, which is what the downstream memories assimilate.
#[derive(Clone, Debug)]
pub struct SlidingWindow {
    frames: VecDeque<FrameFeature>,
    capacity: usize,
}

impl SlidingWindow {
    pub fn new(capacity: usize) -> Result<Self, ConfigError> {
        if capacity == 0 {
            return Err(ConfigError::new("window_len", "must be at least 1"));
        }
        Ok(SlidingWindow {
            frames: VecDeque::with_capacity(capacity + 1),
            capacity,
        })
    }

    /// Appends a frame, returning the evicted oldest frame once full.
    /// Steps must be consecutive with the current newest frame.
    pub fn push(&mut self, frame: FrameFeature) -> Result<Option<FrameFeature>, MemoryError> {
        if let Some(newest) = self.frames.back() {
            if frame.t() != newest.t() + 1 {
                return Err(MemoryError::NonConsecutiveStep {
                    expected: newest.t() + 1,
                    got: frame.t(),
                });
            }
            let (ws, wd) = newest.shape();
            let (gs, gd) = frame.shape();
            if (ws, wd) != (gs, gd) {
                return Err(MemoryError::ShapeMismatch {
                    want_s: ws,
                    want_d: wd,
                    got_s: gs,
                    got_d: gd,
                });
            }
        }
        self.frames.push_back(frame);
        if self.frames.len() > self.capacity {
            Ok(self.frames.pop_front())
        } else {
            Ok(None)
        }
    }

    /// Ordered view, oldest to newest.
    pub fn contents(&self) -> impl Iterator<Item = &FrameFeature> {
        self.frames.iter()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.frames.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}
