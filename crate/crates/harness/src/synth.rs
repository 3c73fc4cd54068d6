//! Planted-episode stream generation with certified similarity margins.
//!
//! Streams are built episode by episode. Each episode draws a unit centroid
//! whose cosine to the previous centroid sits in a narrow band, then emits
//! frames whose tokens are unit-normalized noisy copies of that centroid.
//! After generating an episode, the *actual* pooled-cosine scores are
//! scanned; an episode that lands outside its margins is redrawn (bounded
//! retries), so every returned stream certifies its ground truth:
//!
//! - consecutive frames inside an episode score at least `min_within_cos`;
//! - the junction into each new episode scores inside `[0, max_adjacent_cos]`.
//!
//! The non-negative lower bound at junctions is deliberate: a threshold of
//! exactly zero must detect nothing, which threshold sweeps rely on to show a
//! degenerate extreme. Retrying per episode (rather than per stream) keeps
//! the resample probability independent of stream length.

use freshmem_core::FrameFeature;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Shape of a planted stream.
#[derive(Clone, Debug)]
pub struct SyntheticSpec {
    pub episodes: usize,
    /// Inclusive range of frames per episode.
    pub frames_min: usize,
    pub frames_max: usize,
    /// Tokens per frame.
    pub s: usize,
    /// Dimensions per token.
    pub d: usize,
    /// Token noise scale around the episode centroid.
    pub sigma: f64,
    /// Largest pooled cosine allowed across an episode junction.
    pub max_adjacent_cos: f64,
    /// Smallest pooled cosine allowed between consecutive frames of one episode.
    pub min_within_cos: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            episodes: 5,
            frames_min: 12,
            frames_max: 24,
            s: 4,
            d: 16,
            sigma: 0.1,
            max_adjacent_cos: 0.2,
            min_within_cos: 0.6,
        }
    }
}

/// A generated stream plus its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedStream {
    pub frames: Vec<FrameFeature>,
    /// Steps where a new episode begins; strictly increasing, first > 0.
    pub boundaries: Vec<u64>,
    /// Unit-norm episode centroids, one per episode.
    pub centroids: Vec<Vec<f64>>,
}

impl PlantedStream {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

const EPISODE_ATTEMPTS: usize = 64;

/// Generates a margin-certified stream. Deterministic per (spec, seed).
///
/// Panics if the margins cannot be satisfied within the retry budget or the
/// spec is contradictory (`max_adjacent_cos >= min_within_cos`).
pub fn generate(spec: &SyntheticSpec, seed: u64) -> PlantedStream {
    assert!(spec.episodes >= 1, "need at least one episode");
    assert!(spec.s >= 1 && spec.d >= 2, "need S >= 1 and D >= 2");
    assert!(
        spec.frames_min >= 1 && spec.frames_min <= spec.frames_max,
        "frames_per_episode range is empty"
    );
    assert!(spec.sigma > 0.0, "sigma must be positive");
    assert!(
        spec.max_adjacent_cos < spec.min_within_cos,
        "margins unsatisfiable: junction bound {} must lie below within bound {}",
        spec.max_adjacent_cos,
        spec.min_within_cos
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames: Vec<FrameFeature> = Vec::new();
    let mut pooled: Vec<Vec<f64>> = Vec::new();
    let mut boundaries = Vec::new();
    let mut centroids: Vec<Vec<f64>> = Vec::new();
    let mut min_within = f64::INFINITY;
    let mut within_pairs = 0usize;

    for e in 0..spec.episodes {
        let len = rng.gen_range(spec.frames_min..=spec.frames_max);
        let start_t = frames.len() as u64;
        let mut accepted = false;
        for _ in 0..EPISODE_ATTEMPTS {
            let centroid = match centroids.last() {
                None => unit_gaussian(&mut rng, spec.d),
                Some(prev) => pinned_neighbor(&mut rng, prev, spec.max_adjacent_cos),
            };
            let ep_frames: Vec<FrameFeature> = (0..len)
                .map(|i| noisy_frame(&mut rng, start_t + i as u64, &centroid, spec))
                .collect();
            let ep_pooled: Vec<Vec<f64>> = ep_frames.iter().map(pool).collect();
            let junction_ok = match pooled.last() {
                None => true,
                Some(prev) => {
                    let score = cos(prev, &ep_pooled[0]);
                    (0.0..=spec.max_adjacent_cos).contains(&score)
                }
            };
            let ep_within: Vec<f64> = ep_pooled.windows(2).map(|w| cos(&w[0], &w[1])).collect();
            let within_ok = ep_within.iter().all(|&c| c >= spec.min_within_cos);
            if junction_ok && within_ok {
                if e > 0 {
                    boundaries.push(start_t);
                }
                for &c in &ep_within {
                    min_within = min_within.min(c);
                }
                within_pairs += ep_within.len();
                centroids.push(centroid);
                pooled.extend(ep_pooled);
                frames.extend(ep_frames);
                accepted = true;
                break;
            }
        }
        assert!(
            accepted,
            "margins unsatisfiable: episode {e} rejected {EPISODE_ATTEMPTS} times \
             (seed {seed}); widen the margins or lower sigma"
        );
    }

    // Near-1 thresholds must over-segment somewhere, or a sweep could not
    // distinguish them from the plateau. With any reasonable sigma this holds
    // by a wide margin; a spec quiet enough to break it is a spec error.
    assert!(
        within_pairs == 0 || min_within <= 0.985,
        "stream is too clean: every within-episode score exceeds 0.985"
    );

    PlantedStream {
        frames,
        boundaries,
        centroids,
    }
}

/// Unstructured stream: iid standard-normal tokens, steps from 0.
pub fn gaussian_stream(seed: u64, len: usize, s: usize, d: usize) -> Vec<FrameFeature> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|t| gaussian_frame(&mut rng, t as u64, s, d))
        .collect()
}

pub fn gaussian_frame(rng: &mut ChaCha8Rng, t: u64, s: usize, d: usize) -> FrameFeature {
    let data: Vec<f64> = (0..s * d).map(|_| rng.sample(StandardNormal)).collect();
    FrameFeature::new(t, s, d, data).expect("gaussian frames are finite")
}

fn unit_gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Unit vector whose cosine to `prev` sits mid-band: the junction then stays
/// inside [0, gap] even after pooled noise shifts it.
fn pinned_neighbor(rng: &mut ChaCha8Rng, prev: &[f64], gap: f64) -> Vec<f64> {
    let target = rng.gen_range(0.4 * gap..=0.6 * gap);
    loop {
        let v = unit_gaussian(rng, prev.len());
        let along: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
        let perp: Vec<f64> = v.iter().zip(prev).map(|(a, b)| a - along * b).collect();
        let norm = perp.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            let scale = (1.0 - target * target).sqrt() / norm;
            return prev
                .iter()
                .zip(&perp)
                .map(|(p, q)| target * p + scale * q)
                .collect();
        }
    }
}

fn noisy_frame(rng: &mut ChaCha8Rng, t: u64, centroid: &[f64], spec: &SyntheticSpec) -> FrameFeature {
    let d = centroid.len();
    let mut data = Vec::with_capacity(spec.s * d);
    for _ in 0..spec.s {
        let mut token: Vec<f64> = centroid
            .iter()
            .map(|c| c + spec.sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = token.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm > 1e-9, "degenerate token");
        for x in &mut token {
            *x /= norm;
        }
        data.extend(token);
    }
    FrameFeature::new(t, spec.s, d, data).expect("planted frames are finite")
}

// Certification measures with the same pooled-mean-and-cosine semantics the
// consumers of these streams apply.
fn pool(frame: &FrameFeature) -> Vec<f64> {
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

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_reproduces_the_stream_bit_for_bit() {
        let spec = SyntheticSpec::default();
        let a = generate(&spec, 9);
        let b = generate(&spec, 9);
        assert_eq!(a, b);
        let c = generate(&spec, 10);
        assert_ne!(a.frames, c.frames);
    }

    #[test]
    fn single_episode_has_no_boundaries() {
        let spec = SyntheticSpec {
            episodes: 1,
            ..SyntheticSpec::default()
        };
        let stream = generate(&spec, 3);
        assert!(stream.boundaries.is_empty());
        assert_eq!(stream.centroids.len(), 1);
    }

    #[test]
    fn boundaries_are_strictly_increasing_and_start_past_zero() {
        let stream = generate(&SyntheticSpec::default(), 5);
        assert_eq!(stream.boundaries.len(), 4);
        assert!(stream.boundaries[0] > 0);
        assert!(stream.boundaries.windows(2).all(|w| w[0] < w[1]));
        assert!(*stream.boundaries.last().unwrap() < stream.len() as u64);
    }

    #[test]
    fn certified_margins_hold_on_every_generated_stream() {
        let spec = SyntheticSpec::default();
        for seed in 0..8 {
            let stream = generate(&spec, seed);
            let pooled: Vec<Vec<f64>> = stream.frames.iter().map(pool).collect();
            for i in 1..pooled.len() {
                let score = cos(&pooled[i - 1], &pooled[i]);
                if stream.boundaries.contains(&(i as u64)) {
                    assert!(
                        (0.0..=spec.max_adjacent_cos).contains(&score),
                        "junction at {i} scored {score}"
                    );
                } else {
                    assert!(score >= spec.min_within_cos, "within pair at {i} scored {score}");
                }
            }
        }
    }

    #[test]
    fn centroids_are_unit_norm_and_adjacent_ones_stay_separated() {
        let spec = SyntheticSpec::default();
        let stream = generate(&spec, 11);
        for c in &stream.centroids {
            let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        for pair in stream.centroids.windows(2) {
            let score = cos(&pair[0], &pair[1]);
            assert!(score <= spec.max_adjacent_cos + 1e-12);
        }
    }

    #[test]
    fn tokens_are_unit_norm() {
        let stream = generate(&SyntheticSpec::default(), 2);
        for f in &stream.frames {
            let (s, _) = f.shape();
            for i in 0..s {
                let norm = f.token(i).iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    #[should_panic(expected = "margins unsatisfiable")]
    fn contradictory_margins_are_rejected() {
        let spec = SyntheticSpec {
            max_adjacent_cos: 0.7,
            min_within_cos: 0.6,
            ..SyntheticSpec::default()
        };
        generate(&spec, 0);
    }

    #[test]
    fn gaussian_stream_is_deterministic_with_consecutive_steps() {
        let a = gaussian_stream(5, 50, 2, 3);
        let b = gaussian_stream(5, 50, 2, 3);
        assert_eq!(a, b);
        for (i, f) in a.iter().enumerate() {
            assert_eq!(f.t(), i as u64);
            assert_eq!(f.shape(), (2, 3));
        }
    }

    #[test]
    fn long_streams_generate_within_the_retry_budget() {
        let spec = SyntheticSpec {
            episodes: 60,
            ..SyntheticSpec::default()
        };
        let stream = generate(&spec, 4);
        assert_eq!(stream.boundaries.len(), 59);
        assert!(stream.len() >= 60 * spec.frames_min);
    }
}
