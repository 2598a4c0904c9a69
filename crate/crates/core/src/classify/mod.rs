//! Frame classification: fixed and adaptive threshold baselines, boosted
//! tree scoring with cut/gradual arbitration, and false-positive filtering.

mod model;

use thiserror::Error;

use crate::events::{sort_events, BoundaryEvent};
use crate::metrics::{FeatureTrack, FeatureVector};

pub use model::{logistic, GbdtModel, TreeNode, MODEL_VERSION};

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("feature schema does not match the model")]
    SchemaMismatch,
    #[error("window of {window} frames needs a longer track than {len} frames")]
    WindowTooLarge { window: usize, len: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(&'static str),
    #[error("malformed model file: {0}")]
    ModelFormat(String),
}

pub type Result<T> = std::result::Result<T, ClassifyError>;

/// Start frames of plateaus that are strict local maxima: a run of equal
/// values whose neighbors on both sides (where present) are lower.
pub fn plateau_peaks(track: &[f64]) -> Vec<usize> {
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < track.len() {
        let v = track[i];
        let mut j = i;
        while j + 1 < track.len() && track[j + 1] == v {
            j += 1;
        }
        let left_lower = i == 0 || track[i - 1] < v;
        let right_lower = j + 1 == track.len() || track[j + 1] < v;
        if left_lower && right_lower {
            peaks.push(i);
        }
        i = j + 1;
    }
    peaks
}

fn confidence(value: f64, threshold: f64) -> f64 {
    let c = value / (2.0 * threshold);
    if c.is_nan() {
        1.0
    } else {
        c.clamp(0.0, 1.0)
    }
}

/// Cut at every local maximum of `track` above `theta`.
pub fn threshold_classify(track: &[f64], theta: f64) -> Vec<BoundaryEvent> {
    plateau_peaks(track)
        .into_iter()
        .filter(|&t| track[t] > theta)
        .map(|t| BoundaryEvent::cut(t, confidence(track[t], theta)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveParams {
    /// Neighborhood size, excluding the frame itself.
    pub window: usize,
    pub k: f64,
    pub floor: f64,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        AdaptiveParams {
            window: 30,
            k: 3.0,
            floor: 0.05,
        }
    }
}

/// Per-frame decision level `mean + k * std` over the `window` frames
/// around `t` (half before, half after, `t` excluded, clipped at the
/// stream edges), never below `floor`.
pub fn adaptive_levels(track: &[f64], params: &AdaptiveParams) -> Result<Vec<f64>> {
    if params.window < 4 {
        return Err(ClassifyError::InvalidParam("adaptive window must be at least 4"));
    }
    if params.k.is_nan() || params.k <= 0.0 || params.floor.is_nan() || params.floor < 0.0 {
        return Err(ClassifyError::InvalidParam(
            "adaptive k must be positive and floor non-negative",
        ));
    }
    if params.window >= track.len() {
        return Err(ClassifyError::WindowTooLarge {
            window: params.window,
            len: track.len(),
        });
    }
    let before = params.window / 2;
    let after = params.window - before;
    Ok((0..track.len())
        .map(|t| {
            let lo = t.saturating_sub(before);
            let hi = (t + after).min(track.len() - 1);
            let neighbors = (lo..=hi).filter(|&i| i != t).map(|i| track[i]);
            let n = (hi - lo) as f64;
            let mean = neighbors.clone().sum::<f64>() / n;
            let var = neighbors.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (mean + params.k * var.sqrt()).max(params.floor)
        })
        .collect())
}

/// Cut at local maxima that exceed both the local statistics level and the
/// floor.
pub fn adaptive_threshold_classify(track: &[f64], params: &AdaptiveParams) -> Result<Vec<BoundaryEvent>> {
    let levels = adaptive_levels(track, params)?;
    Ok(plateau_peaks(track)
        .into_iter()
        .filter(|&t| track[t] > levels[t] && track[t] > params.floor)
        .map(|t| BoundaryEvent::cut(t, confidence(track[t], levels[t])))
        .collect())
}

pub fn gbdt_predict(model: &GbdtModel, x: &FeatureVector) -> Result<f64> {
    model.predict(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arbitration {
    pub p_cut: f64,
    pub p_grad: f64,
}

impl Default for Arbitration {
    fn default() -> Self {
        Arbitration {
            p_cut: 0.5,
            p_grad: 0.5,
        }
    }
}

/// Turns per-frame cut and gradual probabilities into events. Cuts fire at
/// local maxima of the cut track at or above `p_cut`; every run of two or
/// more frames at or above `p_grad` that contains no cut becomes one
/// gradual event with the run's mean probability as confidence.
pub fn arbitrate(cut_track: &[f64], grad_track: &[f64], arb: &Arbitration) -> Result<Vec<BoundaryEvent>> {
    if !(arb.p_cut > 0.0 && arb.p_cut < 1.0 && arb.p_grad > 0.0 && arb.p_grad < 1.0) {
        return Err(ClassifyError::InvalidParam("probability thresholds must lie in (0, 1)"));
    }
    if cut_track.len() != grad_track.len() {
        return Err(ClassifyError::InvalidParam("probability tracks differ in length"));
    }
    let mut is_cut = vec![false; cut_track.len()];
    let mut events = Vec::new();
    for t in plateau_peaks(cut_track) {
        if cut_track[t] >= arb.p_cut {
            is_cut[t] = true;
            events.push(BoundaryEvent::cut(t, cut_track[t]));
        }
    }
    let mut t = 0;
    while t < grad_track.len() {
        if is_cut[t] || grad_track[t] < arb.p_grad {
            t += 1;
            continue;
        }
        let start = t;
        while t < grad_track.len() && !is_cut[t] && grad_track[t] >= arb.p_grad {
            t += 1;
        }
        if t - start >= 2 {
            let mean = grad_track[start..t].iter().sum::<f64>() / (t - start) as f64;
            events.push(BoundaryEvent::gradual(start, t - 1, mean));
        }
    }
    sort_events(&mut events);
    Ok(events)
}

/// Cut and gradual probability per frame.
pub fn probability_tracks(
    features: &[FeatureVector],
    cut_model: &GbdtModel,
    grad_model: &GbdtModel,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut cut = Vec::with_capacity(features.len());
    let mut grad = Vec::with_capacity(features.len());
    for x in features {
        cut.push(cut_model.predict(x)?);
        grad.push(grad_model.predict(x)?);
    }
    Ok((cut, grad))
}

pub fn classify_stream(
    features: &[FeatureVector],
    cut_model: &GbdtModel,
    grad_model: &GbdtModel,
    arb: &Arbitration,
) -> Result<Vec<BoundaryEvent>> {
    let (cut, grad) = probability_tracks(features, cut_model, grad_model)?;
    arbitrate(&cut, &grad, arb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostfilterParams {
    /// Events closer than this many frames are merged.
    pub min_gap: usize,
    /// Longest flash, in frames.
    pub flash_window: usize,
    /// Luma Bhattacharyya distance below which two frames count as the same
    /// content.
    pub flash_sim: f64,
}

impl Default for PostfilterParams {
    fn default() -> Self {
        PostfilterParams {
            min_gap: 10,
            flash_window: 3,
            flash_sim: 0.05,
        }
    }
}

/// Merges near-duplicate events and drops cuts that bracket a flash.
///
/// `distance(a, b)` compares frames `a` and `b` of a stream of
/// `frame_count` frames. A cut at `t` is dropped when the content before
/// it reappears within `flash_window` frames after it (`t-1` against
/// `t+j`), or when the content at `t` already appeared just before a flash
/// of up to `flash_window` frames (`t` against `t-1-j`).
pub fn postfilter(
    events: &[BoundaryEvent],
    frame_count: usize,
    distance: impl Fn(usize, usize) -> f64,
    params: &PostfilterParams,
) -> Vec<BoundaryEvent> {
    let mut sorted = events.to_vec();
    sort_events(&mut sorted);
    let mut merged: Vec<BoundaryEvent> = Vec::with_capacity(sorted.len());
    for e in sorted {
        match merged.last_mut() {
            Some(last) if last.gap_to(&e) < params.min_gap as i64 => {
                if e.confidence > last.confidence {
                    *last = e;
                }
            }
            _ => merged.push(e),
        }
    }
    let is_flash = |t: usize| {
        if t == 0 {
            return false;
        }
        (1..=params.flash_window).any(|j| {
            let forward = t + j < frame_count && distance(t - 1, t + j) < params.flash_sim;
            let backward = t > j && t < frame_count && distance(t - 1 - j, t) < params.flash_sim;
            forward || backward
        })
    };
    merged
        .into_iter()
        .filter(|e| !(e.is_cut() && is_flash(e.start)))
        .collect()
}

/// [`postfilter`] with luma histogram distances from a feature track.
pub fn postfilter_track(
    events: &[BoundaryEvent],
    track: &FeatureTrack,
    params: &PostfilterParams,
) -> Vec<BoundaryEvent> {
    postfilter(events, track.luma.len(), |a, b| track.luma_distance(a, b), params)
}

/// Trained-model detection on an extracted track: scoring, arbitration and
/// post-filtering.
pub fn detect(
    track: &FeatureTrack,
    cut_model: &GbdtModel,
    grad_model: &GbdtModel,
    arb: &Arbitration,
    post: &PostfilterParams,
) -> Result<Vec<BoundaryEvent>> {
    let events = classify_stream(&track.vectors, cut_model, grad_model, arb)?;
    Ok(postfilter_track(&events, track, post))
}
