//! Boundary-detection scoring and reconstruction-fidelity measurement.

use freshmem_core::{Engine, EngineConfig, FrameFeature};

use crate::{fmt_sig, HarnessError};

/// Precision/recall over boundary sets with a step tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub predicted: usize,
    pub truth: usize,
    /// Set when there were no predictions, making precision vacuous; it is
    /// reported as 1.0 by convention so F1 stays well-defined.
    pub vacuous_precision: bool,
}

/// Greedy one-to-one matching by distance: all (predicted, truth) pairs
/// within `tolerance` steps are considered closest-first (ties broken by
/// predicted then truth position); each side matches at most once.
pub fn boundary_metrics(predicted: &[u64], truth: &[u64], tolerance: u64) -> BoundaryScore {
    let mut pairs = Vec::new();
    for (pi, &p) in predicted.iter().enumerate() {
        for (ti, &t) in truth.iter().enumerate() {
            let dist = p.abs_diff(t);
            if dist <= tolerance {
                pairs.push((dist, pi, ti));
            }
        }
    }
    pairs.sort_unstable();
    let mut p_used = vec![false; predicted.len()];
    let mut t_used = vec![false; truth.len()];
    let mut matched = 0usize;
    for (_, pi, ti) in pairs {
        if !p_used[pi] && !t_used[ti] {
            p_used[pi] = true;
            t_used[ti] = true;
            matched += 1;
        }
    }
    let vacuous_precision = predicted.is_empty();
    let precision = if vacuous_precision {
        1.0
    } else {
        matched as f64 / predicted.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        matched as f64 / truth.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    BoundaryScore {
        precision,
        recall,
        f1,
        matched,
        predicted: predicted.len(),
        truth: truth.len(),
        vacuous_precision,
    }
}

/// Mean squared error over all `S*D` values of two same-shaped frames.
pub fn reconstruction_mse(a: &FrameFeature, b: &FrameFeature) -> f64 {
    assert_eq!(a.shape(), b.shape(), "MSE needs equal shapes");
    let n = a.values().len();
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorCurvePoint {
    /// Steps back from the most recently assimilated frame.
    pub delta_t: u64,
    pub mse: f64,
}

/// Runs the engine over the whole stream, then reconstructs `last_evicted -
/// delta_t` for each requested lag and scores it against the retained
/// original frame.
pub fn reconstruction_error_curve(
    config: &EngineConfig,
    frames: &[FrameFeature],
    delta_ts: &[u64],
) -> Result<Vec<ErrorCurvePoint>, HarnessError> {
    if frames.is_empty() {
        return Err(HarnessError::Invalid("empty stream".into()));
    }
    let (s, d) = frames[0].shape();
    let mut engine = Engine::new(config.clone(), s, d)?;
    for f in frames {
        engine.step(f.clone())?;
    }
    let last = engine.bank().last_t().ok_or_else(|| {
        HarnessError::Invalid("stream ended before anything left the window".into())
    })?;
    delta_ts
        .iter()
        .map(|&dt| {
            let tau = last.checked_sub(dt).ok_or_else(|| {
                HarnessError::Invalid(format!("lag {dt} exceeds assimilated history {last}"))
            })?;
            let rec = engine.reconstruct_at(tau)?;
            Ok(ErrorCurvePoint {
                delta_t: dt,
                mse: reconstruction_mse(&rec.frame, &frames[tau as usize]),
            })
        })
        .collect()
}

/// One plot-ready observation. Serialized as CSV `x,y,series,seed` or JSON.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow {
    pub x: f64,
    pub y: f64,
    pub series: String,
    pub seed: u64,
}

pub fn rows_to_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("x,y,series,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(r.x),
            fmt_sig(r.y),
            r.series,
            r.seed
        ));
    }
    out
}

pub fn rows_to_json(rows: &[MetricRow]) -> String {
    let values: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "x": r.x,
                "y": r.y,
                "series": r.series,
                "seed": r.seed,
            })
        })
        .collect();
    serde_json::Value::Array(values).to_string()
}
