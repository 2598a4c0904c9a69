//! Shared helpers for integration tests: random frame generators and
//! straightforward per-pixel reference implementations of every metric.

#![allow(dead_code)]

use rand::Rng;
use shotbound::frameio::{Chroma, Frame};

pub const CHROMAS: [Chroma; 3] = [Chroma::C420, Chroma::C422, Chroma::C444];

/// Random frame mixing flat regions, rectangles, ramps and noise so every
/// metric sees non-trivial input.
pub fn random_frame<R: Rng>(rng: &mut R, w: usize, h: usize, chroma: Chroma) -> Frame {
    let (cw, ch) = chroma.plane_dims(w, h);
    let style = rng.gen_range(0..4);
    let base: u8 = rng.gen();
    let noise: i32 = rng.gen_range(0..=80);
    let (rx0, ry0) = (rng.gen_range(0..w), rng.gen_range(0..h));
    let (rx1, ry1) = (rng.gen_range(rx0..=w), rng.gen_range(ry0..=h));
    let fill: u8 = rng.gen();
    let mut y = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let v = match style {
                0 => rng.gen::<u8>() as i32,
                1 => base as i32 + (col * 255 / w) as i32 - 128,
                _ => {
                    if (rx0..rx1).contains(&col) && (ry0..ry1).contains(&row) {
                        fill as i32
                    } else {
                        base as i32
                    }
                }
            };
            let n = if noise > 0 { rng.gen_range(-noise..=noise) } else { 0 };
            y.push((v + n).clamp(0, 255) as u8);
        }
    }
    let cu: u8 = rng.gen();
    let cv: u8 = rng.gen();
    let spread: i32 = rng.gen_range(0..=60);
    let mut plane = |c: u8| -> Vec<u8> {
        (0..cw * ch)
            .map(|_| (c as i32 + if spread > 0 { rng.gen_range(-spread..=spread) } else { 0 }).clamp(0, 255) as u8)
            .collect()
    };
    let u = plane(cu);
    let v = plane(cv);
    Frame::from_planes(0, w, h, chroma, y, u, v).unwrap()
}

fn chroma_index(f: &Frame, x: usize, y: usize) -> usize {
    let (cw, _) = f.chroma().plane_dims(f.width(), f.height());
    let (cx, cy) = match f.chroma() {
        Chroma::C420 => (x / 2, y / 2),
        Chroma::C422 => (x / 2, y),
        Chroma::C444 => (x, y),
    };
    cy * cw + cx
}

fn round_clamp(v: f64) -> u8 {
    let r = (v + 0.5).floor();
    if r < 0.0 {
        0
    } else if r > 255.0 {
        255
    } else {
        r as u8
    }
}

pub fn oracle_rgb(f: &Frame) -> Vec<[u8; 3]> {
    let mut out = Vec::new();
    for y in 0..f.height() {
        for x in 0..f.width() {
            let yy = f.y()[y * f.width() + x] as f64;
            let ci = chroma_index(f, x, y);
            let u = f.u()[ci] as f64 - 128.0;
            let v = f.v()[ci] as f64 - 128.0;
            out.push([
                round_clamp(yy + 1.402 * v),
                round_clamp(yy - 0.344136 * u - 0.714136 * v),
                round_clamp(yy + 1.772 * u),
            ]);
        }
    }
    out
}

/// (H in degrees, S, V); achromatic pixels get hue 0.
pub fn oracle_hsv(f: &Frame) -> Vec<[f64; 3]> {
    oracle_rgb(f)
        .into_iter()
        .map(|[r, g, b]| {
            let (rf, gf, bf) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
            let max = rf.max(gf).max(bf);
            let min = rf.min(gf).min(bf);
            let delta = max - min;
            let s = if max == 0.0 { 0.0 } else { delta / max };
            let h = if delta == 0.0 || max == 0.0 {
                0.0
            } else if r >= g && r >= b {
                let h = 60.0 * ((gf - bf) / delta);
                if h < 0.0 {
                    h + 360.0
                } else {
                    h
                }
            } else if g >= b {
                60.0 * ((bf - rf) / delta + 2.0)
            } else {
                60.0 * ((rf - gf) / delta + 4.0)
            };
            [h, s, max]
        })
        .collect()
}

pub fn oracle_sobel(f: &Frame) -> Vec<f64> {
    let (w, h) = (f.width() as i64, f.height() as i64);
    let px = |x: i64, y: i64| f.y()[(y.clamp(0, h - 1) * w + x.clamp(0, w - 1)) as usize] as f64;
    let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let ky = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let (mut gx, mut gy) = (0.0, 0.0);
            for j in 0..3 {
                for i in 0..3 {
                    let p = px(x + i as i64 - 1, y + j as i64 - 1);
                    gx += kx[j][i] * p;
                    gy += ky[j][i] * p;
                }
            }
            out.push(((gx * gx + gy * gy).sqrt() / (4.0 * 2f64.sqrt())).min(255.0));
        }
    }
    out
}

/// Block index of a coordinate: equal blocks of `size / n`, trailing pixels
/// belong to the last block.
pub fn block_of(coord: usize, size: usize, n: usize) -> usize {
    (coord / (size / n)).min(n - 1)
}

/// Per-block lists of pixel positions (row-major blocks).
fn blocks(w: usize, h: usize, n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new(); n * n];
    for y in 0..h {
        for x in 0..w {
            out[block_of(y, h, n) * n + block_of(x, w, n)].push((x, y));
        }
    }
    out
}

pub fn oracle_block_stats(a: &Frame, b: &Frame, grid: usize) -> (f64, f64) {
    let stats = |f: &Frame| -> Vec<(f64, f64)> {
        blocks(f.width(), f.height(), grid)
            .iter()
            .map(|px| {
                let vals: Vec<f64> = px.iter().map(|&(x, y)| f.y()[y * f.width() + x] as f64).collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
                (mean, var.sqrt())
            })
            .collect()
    };
    let (sa, sb) = (stats(a), stats(b));
    let n = sa.len() as f64;
    let dm: f64 = sa.iter().zip(&sb).map(|(p, q)| (p.0 - q.0).abs()).sum();
    let ds: f64 = sa.iter().zip(&sb).map(|(p, q)| (p.1 - q.1).abs()).sum();
    (dm / n / 255.0, ds / n / 255.0)
}

fn trapezoid(i: usize, n: usize) -> f64 {
    // pixel centers; flat in the central half, linear to 0 at the edges
    let u = (i as f64 + 0.5) / n as f64;
    if (0.25..=0.75).contains(&u) {
        1.0
    } else if u < 0.25 {
        u / 0.25
    } else {
        (1.0 - u) / 0.25
    }
}

pub fn oracle_cum_edge(a: &Frame, b: &Frame, grid: usize, bins: usize) -> f64 {
    let (w, h) = (a.width(), a.height());
    let size = |coord_len: usize, blk: usize| -> (usize, usize) {
        let step = coord_len / grid;
        let start = blk * step;
        let end = if blk + 1 == grid { coord_len } else { start + step };
        (start, end - start)
    };
    let cum = |f: &Frame| -> Vec<Vec<f64>> {
        let mag = oracle_sobel(f);
        let mut out = Vec::new();
        for by in 0..grid {
            for bx in 0..grid {
                let (y0, bh) = size(h, by);
                let (x0, bw) = size(w, bx);
                let mut hist = vec![0.0; bins];
                for y in y0..y0 + bh {
                    for x in x0..x0 + bw {
                        let v = mag[y * w + x] * trapezoid(x - x0, bw) * trapezoid(y - y0, bh);
                        let mut k = (v * bins as f64 / 255.0).floor() as usize;
                        if k >= bins {
                            k = bins - 1;
                        }
                        hist[k] += 1.0;
                    }
                }
                let total = (bw * bh) as f64;
                let mut acc = 0.0;
                out.push(
                    hist.iter()
                        .map(|c| {
                            acc += c / total;
                            acc
                        })
                        .collect(),
                );
            }
        }
        out
    };
    let (ca, cb) = (cum(a), cum(b));
    let mut total = 0.0;
    for (p, q) in ca.iter().zip(&cb) {
        let l1: f64 = p.iter().zip(q).map(|(x, y)| (x - y).abs()).sum();
        total += l1 / (bins - 1) as f64;
    }
    (total / ca.len() as f64).min(1.0)
}

pub fn oracle_color_diff(a: &Frame, b: &Frame, bins: usize) -> Vec<f64> {
    let hist = |f: &Frame| -> Vec<Vec<f64>> {
        let rgb = oracle_rgb(f);
        let mut h = vec![vec![0.0; bins]; 3];
        for p in &rgb {
            for c in 0..3 {
                h[c][p[c] as usize * bins / 256] += 1.0 / rgb.len() as f64;
            }
        }
        h
    };
    let (ha, hb) = (hist(a), hist(b));
    let mut out = Vec::new();
    for c in 0..3 {
        for k in 0..bins {
            out.push((hb[c][k] - ha[c][k]).abs());
        }
    }
    out
}

pub fn oracle_edge_block(a: &Frame, b: &Frame, edge_thresh: f64, block_thresh: f64) -> f64 {
    let dens = |f: &Frame| -> Vec<f64> {
        let mag = oracle_sobel(f);
        blocks(f.width(), f.height(), 10)
            .iter()
            .map(|px| {
                px.iter()
                    .filter(|&&(x, y)| mag[y * f.width() + x] >= edge_thresh)
                    .count() as f64
                    / px.len() as f64
            })
            .collect()
    };
    let (da, db) = (dens(a), dens(b));
    da.iter()
        .zip(&db)
        .filter(|(p, q)| (*p - *q).abs() > block_thresh)
        .count() as f64
        / 100.0
}

pub fn oracle_bhattacharyya(a: &Frame, b: &Frame, bins: usize) -> f64 {
    let hist = |f: &Frame| -> Vec<f64> {
        let mut h = vec![0.0; bins];
        for &p in f.y() {
            h[p as usize * bins / 256] += 1.0;
        }
        let n = f.y().len() as f64;
        h.iter().map(|c| c / n).collect()
    };
    let (p, q) = (hist(a), hist(b));
    let bc: f64 = p.iter().zip(&q).map(|(x, y)| (x * y).sqrt()).sum();
    (1.0 - bc.min(1.0)).max(0.0).sqrt()
}

pub fn oracle_content(a: &Frame, b: &Frame) -> f64 {
    let (ha, hb) = (oracle_hsv(a), oracle_hsv(b));
    let n = ha.len() as f64;
    let (mut dh, mut ds, mut dv) = (0.0, 0.0, 0.0);
    for (p, q) in ha.iter().zip(&hb) {
        let d = (p[0] - q[0]).abs();
        dh += d.min(360.0 - d);
        ds += (p[1] - q[1]).abs();
        dv += (p[2] - q[2]).abs();
    }
    (dh / n / 180.0 + ds / n + dv / n) / 3.0
}

/// Exhaustive root split scan: every feature, every midpoint between
/// distinct values, gains recomputed from scratch for each candidate.
/// Returns the maximal gain and every (feature, threshold) within `eps` of it.
pub fn brute_force_root_split(
    columns: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    lambda: f64,
    min_leaf: usize,
    eps: f64,
) -> Option<(f64, Vec<(usize, f64)>)> {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    let (gt, ht): (f64, f64) = (grad.iter().sum(), hess.iter().sum());
    let mut cands: Vec<(usize, f64, f64)> = Vec::new();
    for (f, col) in columns.iter().enumerate() {
        let mut vals = col.clone();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for pair in vals.windows(2) {
            let thr = (pair[0] + pair[1]) / 2.0;
            let left: Vec<usize> = (0..col.len()).filter(|&i| col[i] < thr).collect();
            let nl = left.len();
            if nl < min_leaf || col.len() - nl < min_leaf {
                continue;
            }
            let gl: f64 = left.iter().map(|&i| grad[i]).sum();
            let hl: f64 = left.iter().map(|&i| hess[i]).sum();
            let gain = 0.5 * (score(gl, hl) + score(gt - gl, ht - hl) - score(gt, ht));
            if gain > 0.0 {
                cands.push((f, thr, gain));
            }
        }
    }
    let best = cands.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
    if cands.is_empty() {
        return None;
    }
    let near = cands
        .iter()
        .filter(|c| c.2 >= best - eps * best.abs().max(1.0))
        .map(|c| (c.0, c.1))
        .collect();
    Some((best, near))
}
