//! Hand-constructed metric cases checked against closed forms and the
//! per-pixel reference implementations.

mod common;

use common::*;
use shotbound::frameio::{Chroma, Frame};
use shotbound::metrics::*;

fn luma(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> Frame {
    Frame::from_luma(0, w, h, (0..w * h).map(|i| f(i % w, i / w)).collect()).unwrap()
}

#[test]
fn sobel_on_ramp_is_400_before_scaling() {
    let ramp = luma(5, 5, |x, _| (50 * x) as u8);
    let (gx, gy) = sobel_gradients(ramp.y(), 5, 5).unwrap();
    for y in 1..4 {
        for x in 1..4 {
            assert_eq!(gx[y * 5 + x], 400);
            assert_eq!(gy[y * 5 + x], 0);
        }
    }
    let mag = sobel_magnitude(ramp.y(), 5, 5).unwrap();
    let oracle = oracle_sobel(&ramp);
    assert!(mag.iter().zip(&oracle).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn checkerboard_changes_only_block_std() {
    let prev = luma(64, 64, |_, _| 100);
    let cur = luma(64, 64, |x, y| if (x + y) % 2 == 0 { 0 } else { 200 });
    let (dm, ds) = block_stats_metric(&prev, &cur, 8).unwrap();
    let (om, os) = oracle_block_stats(&prev, &cur, 8);
    assert_eq!(dm, 0.0);
    assert!((ds - 100.0 / 255.0).abs() < 1e-12);
    assert!((dm - om).abs() < 1e-12 && (ds - os).abs() < 1e-12);
}

#[test]
fn cumulative_edge_extreme_reaches_one() {
    // columns 0,255,255,0 repeated give |Gx| = 1020 at every pixel, so every
    // magnitude is 180.3; with 3 bins that is the top bin. Blocks are 2x2 so
    // every trapezoid weight is 1.
    let prev = luma(8, 8, |_, _| 90);
    let cur = luma(8, 8, |x, _| if matches!(x % 4, 1 | 2) { 255 } else { 0 });
    assert!(oracle_sobel(&cur).iter().all(|&m| m >= 170.0));
    let got = cumulative_edge_histogram_metric(&prev, &cur, 4, 3).unwrap();
    assert_eq!(got, 1.0);
    assert_eq!(oracle_cum_edge(&prev, &cur, 4, 3), 1.0);
    // with the default 16 bins the magnitude cannot reach the top bin
    let partial = cumulative_edge_histogram_metric(&prev, &cur, 4, 16).unwrap();
    assert!((partial - oracle_cum_edge(&prev, &cur, 4, 16)).abs() < 1e-12);
    assert!(partial < 1.0);
}

#[test]
fn edge_blocks_thirty_of_hundred() {
    let prev = luma(100, 100, |_, _| 40);
    let chosen: Vec<usize> = (0..100).filter(|i| (i * 7) % 10 < 3).collect();
    assert_eq!(chosen.len(), 30);
    // a two-pixel bright bar in the middle of each chosen block
    let cur = luma(100, 100, |x, y| {
        let block = (y / 10) * 10 + x / 10;
        if chosen.contains(&block) && matches!(x % 10, 4 | 5) {
            240
        } else {
            40
        }
    });
    let got = edge_block_histogram_metric(&prev, &cur, 64.0, 0.15).unwrap();
    assert_eq!(got, 0.30);
    assert_eq!(oracle_edge_block(&prev, &cur, 64.0, 0.15), 0.30);

    let busy = luma(100, 100, |x, _| if matches!(x % 4, 1 | 2) { 255 } else { 0 });
    assert_eq!(edge_block_histogram_metric(&prev, &busy, 64.0, 0.15).unwrap(), 1.0);
}

#[test]
fn black_white_color_and_content() {
    let black = Frame::solid(0, 16, 16, Chroma::C420, [0, 128, 128]);
    let white = Frame::solid(0, 16, 16, Chroma::C420, [255, 128, 128]);
    let v = color_hist_diff_vector(&black, &white, 16).unwrap();
    let nonzero: Vec<usize> = (0..48).filter(|&i| v[i] != 0.0).collect();
    assert_eq!(nonzero, vec![0, 15, 16, 31, 32, 47]);
    assert!(nonzero.iter().all(|&i| v[i] == 1.0));
    assert_eq!(v, oracle_color_diff(&black, &white, 16));

    let c = content_delta_metric(&black, &white).unwrap();
    assert!((c - 1.0 / 3.0).abs() < 1e-15);
    assert!((c - oracle_content(&black, &white)).abs() < 1e-15);
}

#[test]
fn bhattacharyya_closed_form() {
    // half the pixels in bin 0, half in bin 1 versus everything in bin 0
    let p = luma(16, 16, |x, _| if x < 8 { 0 } else { 8 });
    let q = luma(16, 16, |_, _| 0);
    let got = bhattacharyya_metric(&p, &q, 32).unwrap();
    let want = (1.0 - 0.5f64.sqrt()).sqrt();
    assert!((got - want).abs() < 1e-12);
    assert!((got - 0.5412).abs() < 1e-4);
    let disjoint = luma(16, 16, |_, _| 255);
    assert_eq!(bhattacharyya_metric(&q, &disjoint, 32).unwrap(), 1.0);
}

#[test]
fn identical_window_gives_zero_vector() {
    let f = Frame::solid(0, 32, 32, Chroma::C420, [77, 90, 200]);
    let window = [&f, &f, &f, &f, &f];
    let x = assemble_features(&window, &MetricConfig::default()).unwrap();
    assert_eq!(x.values.len(), 78);
    assert!(x.values.iter().all(|&v| v == 0.0));
}

#[test]
fn geometry_errors() {
    let a = Frame::solid(0, 16, 16, Chroma::C420, [0, 128, 128]);
    let b = Frame::solid(0, 16, 18, Chroma::C420, [0, 128, 128]);
    assert!(matches!(
        block_stats_metric(&a, &b, 8),
        Err(MetricError::GeometryMismatch)
    ));
    let tiny = Frame::solid(0, 8, 8, Chroma::C444, [0, 128, 128]);
    assert!(matches!(
        edge_block_histogram_metric(&tiny, &tiny, 64.0, 0.15),
        Err(MetricError::FrameTooSmall(..))
    ));
    assert!(matches!(
        sobel_magnitude(&[0; 4], 2, 2),
        Err(MetricError::PlaneTooSmall(2, 2))
    ));
}
