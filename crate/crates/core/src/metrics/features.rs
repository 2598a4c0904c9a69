use std::io::Write;
use std::sync::Arc;

use super::{
    bhattacharyya_distance, block_stats_metric, color_hist_diff_vector, content_delta_metric,
    cumulative_edge_histogram_metric, edge_block_histogram_metric, luma_histogram, Histogram, MetricConfig,
    MetricError, Result,
};
use crate::frameio::Frame;

/// Scalar metrics computed for every frame pair, in schema order.
pub const SCALAR_NAMES: [&str; 6] = ["blockmean", "blockstd", "cumedge", "edgeblock", "bhatta", "content"];

/// All metrics for one (previous, current) frame pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMetrics {
    pub scalars: [f64; 6],
    pub color_diff: Vec<f64>,
}

impl PairMetrics {
    pub fn zero(color_bins: usize) -> Self {
        PairMetrics {
            scalars: [0.0; 6],
            color_diff: vec![0.0; 3 * color_bins],
        }
    }

    pub fn compute(prev: &Frame, cur: &Frame, cfg: &MetricConfig) -> Result<Self> {
        let (block_mean, block_std) = block_stats_metric(prev, cur, cfg.stats_grid)?;
        let cum = cumulative_edge_histogram_metric(prev, cur, cfg.cum_grid, cfg.cum_bins)?;
        let edge = edge_block_histogram_metric(prev, cur, cfg.edge_thresh, cfg.block_thresh)?;
        let bhatta = bhattacharyya_distance(
            &luma_histogram(prev, cfg.luma_bins),
            &luma_histogram(cur, cfg.luma_bins),
        );
        let content = content_delta_metric(prev, cur)?;
        Ok(PairMetrics {
            scalars: [block_mean, block_std, cum, edge, bhatta, content],
            color_diff: color_hist_diff_vector(prev, cur, cfg.color_bins)?,
        })
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        SCALAR_NAMES.iter().position(|&n| n == name).map(|i| self.scalars[i])
    }
}

/// Slot names of a feature vector plus their FNV-1a hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    names: Vec<String>,
    hash: u64,
}

fn offset_label(o: isize) -> String {
    match o {
        0 => "t".to_owned(),
        o if o < 0 => format!("t{o}"),
        o => format!("t+{o}"),
    }
}

/// FNV-1a, 64-bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl FeatureSchema {
    pub fn from_names(names: Vec<String>) -> Self {
        let hash = fnv1a64(names.join("\n").as_bytes());
        FeatureSchema { names, hash }
    }

    /// Schema for a `2r+1` frame window: each of the `2r` adjacent pairs
    /// contributes the six scalars, then the full color difference vector
    /// for the central pair `(t-1, t)` or its (sum, max) otherwise.
    pub fn for_config(cfg: &MetricConfig) -> Self {
        let r = cfg.window_radius as isize;
        let mut names = Vec::new();
        for o in (1 - r)..=r {
            let pair = format!("[{},{}]", offset_label(o - 1), offset_label(o));
            names.extend(SCALAR_NAMES.iter().map(|s| format!("{s}{pair}")));
            if o == 0 {
                for ch in ["R", "G", "B"] {
                    names.extend((0..cfg.color_bins).map(|k| format!("colordiff.{ch}{k:02}{pair}")));
                }
            } else {
                names.push(format!("colorsum{pair}"));
                names.push(format!("colormax{pair}"));
            }
        }
        FeatureSchema::from_names(names)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn hash(&self) -> u64 {
        self.hash
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema: Arc<FeatureSchema>,
    pub center_index: usize,
}

impl FeatureVector {
    fn from_pairs(pairs: &[&PairMetrics], schema: Arc<FeatureSchema>, center_index: usize) -> Self {
        let central = pairs.len() / 2 - 1;
        let mut values = Vec::with_capacity(schema.len());
        for (i, p) in pairs.iter().enumerate() {
            values.extend_from_slice(&p.scalars);
            if i == central {
                values.extend_from_slice(&p.color_diff);
            } else {
                values.push(p.color_diff.iter().sum());
                values.push(p.color_diff.iter().cloned().fold(0.0, f64::max));
            }
        }
        debug_assert_eq!(values.len(), schema.len());
        FeatureVector {
            values,
            schema,
            center_index,
        }
    }
}

/// Feature vector for the center frame of `window` (length `2r+1`). Callers
/// replicate boundary frames at stream edges.
pub fn assemble_features(window: &[&Frame], cfg: &MetricConfig) -> Result<FeatureVector> {
    cfg.validate()?;
    if window.len() != 2 * cfg.window_radius + 1 {
        return Err(MetricError::InvalidConfig("window length must be 2 * radius + 1"));
    }
    let pairs = window
        .windows(2)
        .map(|w| PairMetrics::compute(w[0], w[1], cfg))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&PairMetrics> = pairs.iter().collect();
    let schema = Arc::new(FeatureSchema::for_config(cfg));
    Ok(FeatureVector::from_pairs(
        &refs,
        schema,
        window[cfg.window_radius].index(),
    ))
}

/// Everything derived from one pass over a stream.
#[derive(Debug, Clone)]
pub struct FeatureTrack {
    pub schema: Arc<FeatureSchema>,
    pub vectors: Vec<FeatureVector>,
    /// `pairs[i]` describes frames `(i-1, i)`; `pairs[0]` is all zero.
    pub pairs: Vec<PairMetrics>,
    /// Per-frame luma histograms used for flash suppression.
    pub luma: Vec<Histogram>,
}

impl FeatureTrack {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Per-frame values of one scalar metric on the pair ending at each frame.
    pub fn metric_track(&self, name: &str) -> Option<Vec<f64>> {
        SCALAR_NAMES.iter().position(|&n| n == name)?;
        Some(self.pairs.iter().map(|p| p.scalar(name).unwrap_or(0.0)).collect())
    }

    /// Bhattacharyya distance between the luma histograms of two frames.
    pub fn luma_distance(&self, a: usize, b: usize) -> f64 {
        bhattacharyya_distance(&self.luma[a], &self.luma[b])
    }
}

/// Streaming extractor: holds only the previous frame.
pub struct FeatureExtractor {
    cfg: MetricConfig,
    schema: Arc<FeatureSchema>,
    prev: Option<Frame>,
    pairs: Vec<PairMetrics>,
    luma: Vec<Histogram>,
}

impl FeatureExtractor {
    pub fn new(cfg: MetricConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(FeatureExtractor {
            schema: Arc::new(FeatureSchema::for_config(&cfg)),
            cfg,
            prev: None,
            pairs: Vec::new(),
            luma: Vec::new(),
        })
    }

    pub fn push(&mut self, frame: Frame) -> Result<()> {
        let pair = match &self.prev {
            None => PairMetrics::zero(self.cfg.color_bins),
            Some(prev) => PairMetrics::compute(prev, &frame, &self.cfg)?,
        };
        self.pairs.push(pair);
        self.luma.push(luma_histogram(&frame, self.cfg.luma_bins));
        self.prev = Some(frame);
        Ok(())
    }

    pub fn frames_seen(&self) -> usize {
        self.pairs.len()
    }

    pub fn finish(self) -> FeatureTrack {
        let n = self.pairs.len();
        let r = self.cfg.window_radius as isize;
        let zero = PairMetrics::zero(self.cfg.color_bins);
        let clamp = |i: isize| i.clamp(0, n as isize - 1) as usize;
        let vectors = (0..n)
            .map(|t| {
                let refs: Vec<&PairMetrics> = ((1 - r)..=r)
                    .map(|o| {
                        let (a, b) = (clamp(t as isize + o - 1), clamp(t as isize + o));
                        if a == b {
                            &zero
                        } else {
                            &self.pairs[b]
                        }
                    })
                    .collect();
                FeatureVector::from_pairs(&refs, self.schema.clone(), t)
            })
            .collect();
        FeatureTrack {
            schema: self.schema,
            vectors,
            pairs: self.pairs,
            luma: self.luma,
        }
    }
}

pub fn extract_features(frames: impl IntoIterator<Item = Frame>, cfg: &MetricConfig) -> Result<FeatureTrack> {
    let mut ex = FeatureExtractor::new(cfg.clone())?;
    for f in frames {
        ex.push(f)?;
    }
    Ok(ex.finish())
}

/// C `%.9g` formatting.
pub fn format_g9(v: f64) -> String {
    const P: i32 = 9;
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if negative { "-" } else { "" };
    if !(-4..P).contains(&exp) {
        let mut m = format!("{}.{}", &digits[..1], &digits[1..]);
        trim_zeros(&mut m);
        let esign = if exp < 0 { '-' } else { '+' };
        format!("{sign}{m}e{esign}{:02}", exp.abs())
    } else {
        let mut s = if exp >= 0 {
            let split = (exp + 1) as usize;
            format!("{}.{}", &digits[..split], &digits[split..])
        } else {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
        };
        trim_zeros(&mut s);
        format!("{sign}{s}")
    }
}

fn trim_zeros(s: &mut String) {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
}

/// Writes one row per frame: `frame_index`, the schema values and, when
/// `labels` is given, a trailing `label` column.
pub fn write_feature_csv<W: Write>(sink: W, track: &FeatureTrack, labels: Option<&[&str]>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["frame_index".to_owned()];
    header.extend(track.schema.names().iter().cloned());
    if labels.is_some() {
        header.push("label".to_owned());
    }
    w.write_record(&header)?;
    for (t, fv) in track.vectors.iter().enumerate() {
        let mut row = vec![fv.center_index.to_string()];
        row.extend(fv.values.iter().map(|&v| format_g9(v)));
        if let Some(labels) = labels {
            row.push(labels.get(t).copied().unwrap_or("none").to_owned());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
