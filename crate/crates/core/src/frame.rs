//! The unit of streaming: one step's worth of token features.

use serde::{Deserialize, Serialize};

use crate::error::FrameError;

/// One frame: `S` tokens of `D` dimensions each, tagged with its step index.
///
/// Values are stored row-major (`token * D + dim`) in f64, regardless of the
/// wire precision they came from. All values are finite by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameFeature {
    t: u64,
    s: usize,
    d: usize,
    data: Vec<f64>,
}

impl FrameFeature {
    /// Builds a frame, validating shape and finiteness.
    pub fn new(t: u64, s: usize, d: usize, data: Vec<f64>) -> Result<Self, FrameError> {
        if s == 0 || d == 0 {
            return Err(FrameError::EmptyShape { s, d });
        }
        if data.len() != s * d {
            return Err(FrameError::DataLength {
                len: data.len(),
                s,
                d,
            });
        }
        for (i, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(FrameError::NonFinite { s: i / d, d: i % d });
            }
        }
        Ok(FrameFeature { t, s, d, data })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// `(S, D)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.s, self.d)
    }

    pub fn token_count(&self) -> usize {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Row-major view of all values.
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// One token's feature vector.
    pub fn token(&self, s: usize) -> &[f64] {
        &self.data[s * self.d..(s + 1) * self.d]
    }

    pub fn value(&self, s: usize, d: usize) -> f64 {
        self.data[s * self.d + d]
    }

    /// Same values, different step tag. Used when replaying stored frames.
    pub fn with_t(&self, t: u64) -> FrameFeature {
        FrameFeature {
            t,
            s: self.s,
            d: self.d,
            data: self.data.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_shape() {
        assert_eq!(
            FrameFeature::new(0, 0, 3, vec![]),
            Err(FrameError::EmptyShape { s: 0, d: 3 })
        );
        assert_eq!(
            FrameFeature::new(0, 2, 0, vec![]),
            Err(FrameError::EmptyShape { s: 2, d: 0 })
        );
    }

    #[test]
    fn rejects_wrong_data_length() {
        assert_eq!(
            FrameFeature::new(0, 2, 3, vec![0.0; 5]),
            Err(FrameError::DataLength { len: 5, s: 2, d: 3 })
        );
    }

    #[test]
    fn rejects_non_finite_and_reports_position() {
        let mut data = vec![0.0; 6];
        data[4] = f64::NAN;
        assert_eq!(
            FrameFeature::new(0, 2, 3, data),
            Err(FrameError::NonFinite { s: 1, d: 1 })
        );
        let mut data = vec![0.0; 6];
        data[2] = f64::INFINITY;
        assert_eq!(
            FrameFeature::new(0, 2, 3, data),
            Err(FrameError::NonFinite { s: 0, d: 2 })
        );
    }

    #[test]
    fn token_views_are_row_major() {
        let f = FrameFeature::new(7, 2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(f.t(), 7);
        assert_eq!(f.shape(), (2, 3));
        assert_eq!(f.token(0), &[1.0, 2.0, 3.0]);
        assert_eq!(f.token(1), &[4.0, 5.0, 6.0]);
        assert_eq!(f.value(1, 2), 6.0);
    }
}
