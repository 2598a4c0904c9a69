//! End-to-end runs over frame streams: feature extraction and timed
//! detection.

use std::time::Instant;

use thiserror::Error;

use crate::classify::{
    adaptive_threshold_classify, classify_stream, postfilter_track, threshold_classify, AdaptiveParams, Arbitration,
    ClassifyError, GbdtModel, PostfilterParams,
};
use crate::evaluate::{throughput, EvalError};
use crate::events::BoundaryEvent;
use crate::frameio::{Frame, FrameIoError};
use crate::metrics::{FeatureExtractor, FeatureSchema, FeatureTrack, MetricConfig, MetricError, SCALAR_NAMES};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Frame(#[from] FrameIoError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Extracts features from a frame stream, holding one frame at a time.
pub fn extract_stream<I>(frames: I, cfg: &MetricConfig) -> Result<FeatureTrack>
where
    I: IntoIterator<Item = std::result::Result<Frame, FrameIoError>>,
{
    let mut ex = FeatureExtractor::new(cfg.clone())?;
    for f in frames {
        ex.push(f?)?;
    }
    Ok(ex.finish())
}

/// How frames are turned into boundary events.
#[derive(Debug, Clone)]
pub enum Detector<'a> {
    Models {
        cut: &'a GbdtModel,
        gradual: &'a GbdtModel,
        arbitration: Arbitration,
    },
    Threshold {
        metric: &'a str,
        theta: f64,
    },
    Adaptive {
        metric: &'a str,
        params: AdaptiveParams,
    },
}

impl Detector<'_> {
    fn check(&self, cfg: &MetricConfig) -> Result<()> {
        match self {
            Detector::Models { cut, gradual, .. } => {
                let schema = FeatureSchema::for_config(cfg);
                cut.check_schema(&schema)?;
                gradual.check_schema(&schema)?;
            }
            Detector::Threshold { metric, theta } => {
                if !SCALAR_NAMES.contains(metric) {
                    return Err(PipelineError::UnknownMetric(metric.to_string()));
                }
                if !theta.is_finite() {
                    return Err(ClassifyError::InvalidParam("threshold must be finite").into());
                }
            }
            Detector::Adaptive { metric, .. } => {
                if !SCALAR_NAMES.contains(metric) {
                    return Err(PipelineError::UnknownMetric(metric.to_string()));
                }
            }
        }
        Ok(())
    }

    /// Unfiltered events for an extracted track.
    pub fn classify(&self, track: &FeatureTrack) -> Result<Vec<BoundaryEvent>> {
        let metric_track = |m: &str| {
            track
                .metric_track(m)
                .ok_or_else(|| PipelineError::UnknownMetric(m.to_string()))
        };
        Ok(match self {
            Detector::Models {
                cut,
                gradual,
                arbitration,
            } => classify_stream(&track.vectors, cut, gradual, arbitration)?,
            Detector::Threshold { metric, theta } => threshold_classify(&metric_track(metric)?, *theta),
            Detector::Adaptive { metric, params } => adaptive_threshold_classify(&metric_track(metric)?, params)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DetectionRun {
    pub events: Vec<BoundaryEvent>,
    pub frames: usize,
    /// Wall-clock seconds from the first frame read to the filtered events.
    pub elapsed_secs: f64,
    pub fps: f64,
}

/// Decodes, extracts, classifies and optionally post-filters a stream,
/// timing the whole run.
pub fn run_detection<I>(
    frames: I,
    cfg: &MetricConfig,
    detector: &Detector<'_>,
    post: Option<&PostfilterParams>,
) -> Result<DetectionRun>
where
    I: IntoIterator<Item = std::result::Result<Frame, FrameIoError>>,
{
    detector.check(cfg)?;
    let start = Instant::now();
    let track = extract_stream(frames, cfg)?;
    let raw = detector.classify(&track)?;
    let events = match post {
        Some(p) => postfilter_track(&raw, &track, p),
        None => raw,
    };
    let elapsed_secs = start.elapsed().as_secs_f64();
    let frames = track.len();
    let fps = throughput(frames, elapsed_secs.max(f64::MIN_POSITIVE))?;
    Ok(DetectionRun {
        events,
        frames,
        elapsed_secs,
        fps,
    })
}
