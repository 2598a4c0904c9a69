//! Frame-difference metrics for consecutive frame pairs.
//!
//! Six families are computed per pair: block luma statistics (mean and
//! standard deviation deltas), a cumulative edge histogram distance, a
//! per-channel color histogram difference vector, a block edge-density
//! change ratio, the Bhattacharyya distance between luma histograms and an
//! HSV content delta. Every metric is zero on identical frames and
//! symmetric in its arguments.

mod features;
mod histogram;

use thiserror::Error;

use crate::frameio::Frame;

pub use features::{
    assemble_features, extract_features, fnv1a64, format_g9, write_feature_csv, FeatureExtractor, FeatureSchema,
    FeatureTrack, FeatureVector, PairMetrics, SCALAR_NAMES,
};
pub use histogram::{bhattacharyya_distance, Histogram};

/// Grid used by the edge block metric (10x10 = 100 blocks).
pub const EDGE_GRID: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("frames differ in geometry")]
    GeometryMismatch,
    #[error("plane is {0}x{1}, at least 3x3 is required")]
    PlaneTooSmall(usize, usize),
    #[error("frame is {0}x{1}, smaller than the {2}x{2} block grid")]
    FrameTooSmall(usize, usize, usize),
    #[error("invalid metric configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("feature vectors use different schemas")]
    SchemaMismatch,
}

pub type Result<T> = std::result::Result<T, MetricError>;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    /// Blocks per side for the luma mean/std metric.
    pub stats_grid: usize,
    /// Blocks per side for the cumulative edge histogram.
    pub cum_grid: usize,
    pub cum_bins: usize,
    /// Bins per RGB channel in the color difference vector.
    pub color_bins: usize,
    /// Sobel magnitude (0..255 scale) at or above which a pixel is an edge.
    pub edge_thresh: f64,
    /// Density change above which an edge block counts as different.
    pub block_thresh: f64,
    pub luma_bins: usize,
    /// Frames of context on each side of the described frame.
    pub window_radius: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            stats_grid: 8,
            cum_grid: 4,
            cum_bins: 16,
            color_bins: 16,
            edge_thresh: 64.0,
            block_thresh: 0.15,
            luma_bins: 32,
            window_radius: 2,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stats_grid == 0 || self.cum_grid == 0 {
            return Err(MetricError::InvalidConfig("block grids need at least one block"));
        }
        if self.cum_bins < 2 || self.color_bins < 2 || self.luma_bins < 2 {
            return Err(MetricError::InvalidConfig("histograms need at least two bins"));
        }
        if self.color_bins > 256 || self.luma_bins > 256 {
            return Err(MetricError::InvalidConfig("8-bit histograms have at most 256 bins"));
        }
        if self.window_radius == 0 {
            return Err(MetricError::InvalidConfig("window radius must be at least 1"));
        }
        if !self.edge_thresh.is_finite() || !self.block_thresh.is_finite() {
            return Err(MetricError::InvalidConfig("thresholds must be finite"));
        }
        Ok(())
    }
}

fn check_pair(prev: &Frame, cur: &Frame) -> Result<()> {
    if prev.width() != cur.width() || prev.height() != cur.height() {
        return Err(MetricError::GeometryMismatch);
    }
    Ok(())
}

/// Splits `size` into `n` contiguous ranges of `size / n`; the remainder
/// folds into the last range.
pub(crate) fn block_ranges(size: usize, n: usize) -> Vec<(usize, usize)> {
    let step = size / n;
    (0..n)
        .map(|i| (i * step, if i + 1 == n { size } else { (i + 1) * step }))
        .collect()
}

fn check_grid(frame: &Frame, grid: usize) -> Result<()> {
    if frame.width() < grid || frame.height() < grid {
        return Err(MetricError::FrameTooSmall(frame.width(), frame.height(), grid));
    }
    Ok(())
}

/// Raw Sobel responses with edge-replicated borders.
pub fn sobel_gradients(plane: &[u8], width: usize, height: usize) -> Result<(Vec<i32>, Vec<i32>)> {
    if width < 3 || height < 3 || plane.len() != width * height {
        return Err(MetricError::PlaneTooSmall(width, height));
    }
    let mut gx = vec![0; width * height];
    let mut gy = vec![0; width * height];
    let at = |x: usize, y: usize| i32::from(plane[y * width + x]);
    for y in 0..height {
        let (ym, yp) = (y.saturating_sub(1), (y + 1).min(height - 1));
        for x in 0..width {
            let (xm, xp) = (x.saturating_sub(1), (x + 1).min(width - 1));
            let i = y * width + x;
            gx[i] = (at(xp, ym) + 2 * at(xp, y) + at(xp, yp)) - (at(xm, ym) + 2 * at(xm, y) + at(xm, yp));
            gy[i] = (at(xm, yp) + 2 * at(x, yp) + at(xp, yp)) - (at(xm, ym) + 2 * at(x, ym) + at(xp, ym));
        }
    }
    Ok((gx, gy))
}

/// Gradient magnitude rescaled to `[0, 255]`.
pub fn sobel_magnitude(plane: &[u8], width: usize, height: usize) -> Result<Vec<f64>> {
    let (gx, gy) = sobel_gradients(plane, width, height)?;
    let scale = 4.0 * std::f64::consts::SQRT_2;
    Ok(gx
        .iter()
        .zip(&gy)
        .map(|(&x, &y)| {
            let (x, y) = (f64::from(x), f64::from(y));
            ((x * x + y * y).sqrt() / scale).clamp(0.0, 255.0)
        })
        .collect())
}

fn frame_edges(frame: &Frame) -> Result<&[f64]> {
    if frame.width() < 3 || frame.height() < 3 {
        return Err(MetricError::PlaneTooSmall(frame.width(), frame.height()));
    }
    Ok(frame
        .edges
        .get_or_init(|| sobel_magnitude(frame.y(), frame.width(), frame.height()).expect("size checked")))
}

/// Per-block luma (mean, population std) over a `grid`x`grid` partition.
fn block_moments(frame: &Frame, grid: usize) -> Vec<(f64, f64)> {
    let w = frame.width();
    let y = frame.y();
    let rows = block_ranges(frame.height(), grid);
    let cols = block_ranges(w, grid);
    let mut out = Vec::with_capacity(grid * grid);
    for &(y0, y1) in &rows {
        for &(x0, x1) in &cols {
            let (mut sum, mut sumsq) = (0u64, 0u64);
            for row in y0..y1 {
                for &p in &y[row * w + x0..row * w + x1] {
                    let p = u64::from(p);
                    sum += p;
                    sumsq += p * p;
                }
            }
            let n = ((y1 - y0) * (x1 - x0)) as u64;
            // n^2 * var = n * sumsq - sum^2, exact in integers
            let scaled_var = (u128::from(n) * u128::from(sumsq) - u128::from(sum) * u128::from(sum)) as f64;
            let n = n as f64;
            out.push((sum as f64 / n, scaled_var.sqrt() / n));
        }
    }
    out
}

/// Mean absolute change of block luma means and standard deviations, both
/// scaled to `[0, 1]`.
pub fn block_stats_metric(prev: &Frame, cur: &Frame, grid: usize) -> Result<(f64, f64)> {
    check_pair(prev, cur)?;
    if grid == 0 {
        return Err(MetricError::InvalidConfig("block grid must be positive"));
    }
    check_grid(cur, grid)?;
    let a = block_moments(prev, grid);
    let b = block_moments(cur, grid);
    let n = a.len() as f64;
    let (mut dm, mut ds) = (0.0, 0.0);
    for (p, c) in a.iter().zip(&b) {
        dm += (c.0 - p.0).abs();
        ds += (c.1 - p.1).abs();
    }
    Ok(((dm / n / 255.0).clamp(0.0, 1.0), (ds / n / 255.0).clamp(0.0, 1.0)))
}

/// Trapezoid weight for position `i` of a block spanning `n` pixels: 1 over
/// the central half, falling linearly to 0 at the block edges.
pub fn trapezoid_weight(i: usize, n: usize) -> f64 {
    let u = (i as f64 + 0.5) / n as f64;
    let d = u.min(1.0 - u);
    (d / 0.25).min(1.0)
}

/// Histogram bin of a value in `[0, 255]` for `bins` equal bins.
pub fn magnitude_bin(value: f64, bins: usize) -> usize {
    ((value * bins as f64 / 255.0).floor() as usize).min(bins - 1)
}

fn cumulative_block_histograms(frame: &Frame, grid: usize, bins: usize) -> Result<Vec<Vec<f64>>> {
    let edges = frame_edges(frame)?;
    let w = frame.width();
    let rows = block_ranges(frame.height(), grid);
    let cols = block_ranges(w, grid);
    let mut out = Vec::with_capacity(grid * grid);
    for &(y0, y1) in &rows {
        let wy: Vec<f64> = (0..y1 - y0).map(|i| trapezoid_weight(i, y1 - y0)).collect();
        for &(x0, x1) in &cols {
            let wx: Vec<f64> = (0..x1 - x0).map(|i| trapezoid_weight(i, x1 - x0)).collect();
            let mut counts = vec![0u32; bins];
            for (ry, row) in (y0..y1).enumerate() {
                for (rx, &m) in edges[row * w + x0..row * w + x1].iter().enumerate() {
                    counts[magnitude_bin(m * wx[rx] * wy[ry], bins)] += 1;
                }
            }
            let n = ((y1 - y0) * (x1 - x0)) as f64;
            let mut acc = 0u32;
            out.push(
                counts
                    .iter()
                    .map(|&c| {
                        acc += c;
                        f64::from(acc) / n
                    })
                    .collect(),
            );
        }
    }
    Ok(out)
}

/// Mean over blocks of the normalized L1 distance between cumulative
/// histograms of trapezoid-weighted Sobel magnitudes.
pub fn cumulative_edge_histogram_metric(prev: &Frame, cur: &Frame, grid: usize, bins: usize) -> Result<f64> {
    check_pair(prev, cur)?;
    if grid == 0 || bins < 2 {
        return Err(MetricError::InvalidConfig(
            "cumulative edge histogram needs grid >= 1 and bins >= 2",
        ));
    }
    check_grid(cur, grid)?;
    let a = cumulative_block_histograms(prev, grid, bins)?;
    let b = cumulative_block_histograms(cur, grid, bins)?;
    let total: f64 = a
        .iter()
        .zip(&b)
        .map(|(ha, hb)| ha.iter().zip(hb).map(|(x, y)| (x - y).abs()).sum::<f64>() / (bins - 1) as f64)
        .sum();
    Ok((total / a.len() as f64).clamp(0.0, 1.0))
}

fn channel_histogram(plane: &[u8], bins: usize) -> Vec<u32> {
    let mut counts = vec![0u32; bins];
    for &p in plane {
        counts[usize::from(p) * bins / 256] += 1;
    }
    counts
}

/// `|H_cur - H_prev|` per RGB channel and bin, histograms normalized by the
/// pixel count. Layout is R bins, then G, then B.
pub fn color_hist_diff_vector(prev: &Frame, cur: &Frame, bins: usize) -> Result<Vec<f64>> {
    check_pair(prev, cur)?;
    if !(2..=256).contains(&bins) {
        return Err(MetricError::InvalidConfig("color bins must be in 2..=256"));
    }
    let (a, b) = (prev.rgb(), cur.rgb());
    let n = (cur.width() * cur.height()) as f64;
    let mut out = Vec::with_capacity(3 * bins);
    for (pa, pb) in [(&a.r, &b.r), (&a.g, &b.g), (&a.b, &b.b)] {
        let (ha, hb) = (channel_histogram(pa, bins), channel_histogram(pb, bins));
        out.extend(
            ha.iter()
                .zip(&hb)
                .map(|(&x, &y)| (f64::from(x) - f64::from(y)).abs() / n),
        );
    }
    Ok(out)
}

fn edge_densities(frame: &Frame, edge_thresh: f64) -> Result<Vec<f64>> {
    let edges = frame_edges(frame)?;
    let w = frame.width();
    let rows = block_ranges(frame.height(), EDGE_GRID);
    let cols = block_ranges(w, EDGE_GRID);
    let mut out = Vec::with_capacity(EDGE_GRID * EDGE_GRID);
    for &(y0, y1) in &rows {
        for &(x0, x1) in &cols {
            let count = (y0..y1)
                .flat_map(|row| &edges[row * w + x0..row * w + x1])
                .filter(|&&m| m >= edge_thresh)
                .count();
            out.push(count as f64 / ((y1 - y0) * (x1 - x0)) as f64);
        }
    }
    Ok(out)
}

/// Fraction of the 100 blocks whose edge density changed by more than
/// `block_thresh`.
pub fn edge_block_histogram_metric(prev: &Frame, cur: &Frame, edge_thresh: f64, block_thresh: f64) -> Result<f64> {
    check_pair(prev, cur)?;
    check_grid(cur, EDGE_GRID)?;
    let a = edge_densities(prev, edge_thresh)?;
    let b = edge_densities(cur, edge_thresh)?;
    let changed = a.iter().zip(&b).filter(|(x, y)| (*x - *y).abs() > block_thresh).count();
    Ok(changed as f64 / a.len() as f64)
}

pub fn luma_histogram(frame: &Frame, bins: usize) -> Histogram {
    Histogram::from_samples(frame.y(), bins)
}

/// Bhattacharyya distance between the luma histograms of two frames.
pub fn bhattacharyya_metric(prev: &Frame, cur: &Frame, bins: usize) -> Result<f64> {
    check_pair(prev, cur)?;
    if !(2..=256).contains(&bins) {
        return Err(MetricError::InvalidConfig("luma bins must be in 2..=256"));
    }
    Ok(bhattacharyya_distance(
        &luma_histogram(prev, bins),
        &luma_histogram(cur, bins),
    ))
}

/// Average of the mean circular hue change (degrees / 180) and the mean
/// saturation and value changes.
pub fn content_delta_metric(prev: &Frame, cur: &Frame) -> Result<f64> {
    check_pair(prev, cur)?;
    let (a, b) = (prev.hsv(), cur.hsv());
    let (mut dh, mut ds, mut dv) = (0.0, 0.0, 0.0);
    for i in 0..a.h.len() {
        let h = (a.h[i] - b.h[i]).abs();
        dh += if h > 180.0 { 360.0 - h } else { h };
        ds += (a.s[i] - b.s[i]).abs();
        dv += (a.v[i] - b.v[i]).abs();
    }
    let n = a.h.len() as f64;
    Ok(((dh / n / 180.0 + ds / n + dv / n) / 3.0).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frameio::Chroma;

    fn luma_frame(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> Frame {
        let y = (0..w * h).map(|i| f(i % w, i / w)).collect();
        Frame::from_luma(0, w, h, y).unwrap()
    }

    #[test]
    fn sobel_constant_and_ramp() {
        let flat = vec![90u8; 25];
        assert!(sobel_magnitude(&flat, 5, 5).unwrap().iter().all(|&m| m == 0.0));

        let ramp: Vec<u8> = (0..25).map(|i| (50 * (i % 5)) as u8).collect();
        let (gx, gy) = sobel_gradients(&ramp, 5, 5).unwrap();
        for y in 1..4 {
            for x in 1..4 {
                assert_eq!(gx[y * 5 + x], 400);
                assert_eq!(gy[y * 5 + x], 0);
            }
        }
        assert_eq!(sobel_magnitude(&ramp, 2, 2), Err(MetricError::PlaneTooSmall(2, 2)));
    }

    #[test]
    fn sobel_vertical_step() {
        let step: Vec<u8> = (0..64).map(|i| if i % 8 < 4 { 0 } else { 255 }).collect();
        let m = sobel_magnitude(&step, 8, 8).unwrap();
        let max = m.iter().cloned().fold(0.0, f64::max);
        for y in 0..8 {
            assert_eq!(m[y * 8 + 3], max);
            assert_eq!(m[y * 8 + 4], max);
            assert_eq!(m[y * 8], 0.0);
            assert_eq!(m[y * 8 + 7], 0.0);
        }
        // 4*255 / (4*sqrt 2)
        assert!((max - 255.0 / std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn block_stats_examples() {
        let black = luma_frame(16, 16, |_, _| 0);
        let white = luma_frame(16, 16, |_, _| 255);
        assert_eq!(block_stats_metric(&black, &black, 8).unwrap(), (0.0, 0.0));
        assert_eq!(block_stats_metric(&black, &white, 8).unwrap(), (1.0, 0.0));

        let flat = luma_frame(16, 16, |_, _| 100);
        let checker = luma_frame(16, 16, |x, y| if (x + y) % 2 == 0 { 0 } else { 200 });
        let (dm, ds) = block_stats_metric(&flat, &checker, 8).unwrap();
        assert_eq!(dm, 0.0);
        assert!((ds - 100.0 / 255.0).abs() < 1e-15);
    }

    #[test]
    fn geometry_mismatch() {
        let a = luma_frame(16, 16, |_, _| 0);
        let b = luma_frame(16, 12, |_, _| 0);
        assert_eq!(block_stats_metric(&a, &b, 8), Err(MetricError::GeometryMismatch));
        assert_eq!(content_delta_metric(&a, &b), Err(MetricError::GeometryMismatch));
        let small = luma_frame(8, 8, |_, _| 0);
        assert!(matches!(
            edge_block_histogram_metric(&small, &small, 64.0, 0.15),
            Err(MetricError::FrameTooSmall(..))
        ));
    }

    #[test]
    fn trapezoid_shape() {
        assert_eq!(trapezoid_weight(0, 2), 1.0);
        assert_eq!(trapezoid_weight(3, 8), 1.0);
        assert_eq!(trapezoid_weight(0, 8), 0.25);
        assert_eq!(trapezoid_weight(7, 8), 0.25);
        assert_eq!(trapezoid_weight(1, 8), 0.75);
    }

    #[test]
    fn color_diff_black_to_white() {
        let black = Frame::solid(0, 8, 8, Chroma::C420, [0, 128, 128]);
        let white = Frame::solid(1, 8, 8, Chroma::C420, [255, 128, 128]);
        let v = color_hist_diff_vector(&black, &white, 16).unwrap();
        assert_eq!(v.len(), 48);
        let nonzero: Vec<usize> = (0..48).filter(|&i| v[i] != 0.0).collect();
        assert_eq!(nonzero, vec![0, 15, 16, 31, 32, 47]);
        assert!(nonzero.iter().all(|&i| v[i] == 1.0));
        assert!(color_hist_diff_vector(&black, &black, 16)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn content_delta_black_white() {
        let black = Frame::solid(0, 8, 8, Chroma::C420, [0, 128, 128]);
        let white = Frame::solid(1, 8, 8, Chroma::C420, [255, 128, 128]);
        assert_eq!(content_delta_metric(&black, &white).unwrap(), 1.0 / 3.0);
        assert_eq!(content_delta_metric(&white, &white).unwrap(), 0.0);
    }

    #[test]
    fn bhattacharyya_disjoint_and_identical() {
        let a = luma_frame(16, 16, |_, _| 10);
        let b = luma_frame(16, 16, |_, _| 250);
        assert_eq!(bhattacharyya_metric(&a, &b, 32).unwrap(), 1.0);
        let noise = luma_frame(16, 16, |x, y| ((x * 37 + y * 91) % 256) as u8);
        assert_eq!(bhattacharyya_metric(&noise, &noise, 32).unwrap(), 0.0);
    }

    #[test]
    fn edge_block_full_change() {
        let flat = luma_frame(20, 20, |_, _| 0);
        // Vertical stripes of width 1 give strong gradients at every pixel.
        let stripes = luma_frame(20, 20, |x, _| if (x / 2) % 2 == 0 { 0 } else { 255 });
        assert_eq!(edge_block_histogram_metric(&flat, &stripes, 64.0, 0.15).unwrap(), 1.0);
        assert_eq!(
            edge_block_histogram_metric(&stripes, &stripes, 64.0, 0.15).unwrap(),
            0.0
        );
    }

    #[test]
    fn block_ranges_fold_remainder() {
        assert_eq!(block_ranges(10, 3), vec![(0, 3), (3, 6), (6, 10)]);
        assert_eq!(block_ranges(16, 8).len(), 8);
    }
}
