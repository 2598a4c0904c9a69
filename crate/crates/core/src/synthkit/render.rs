use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DistractorKind, Pattern, SceneSpec, SequenceSpec, TransitionSpec};
use crate::frameio::{yuv_from_rgb, Chroma, Frame};

const BLACK: [f64; 3] = [0.0, 128.0, 128.0];

pub fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

fn to_u8(v: f64) -> u8 {
    round_half_up(v).clamp(0.0, 255.0) as u8
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic value in [-1, 1) for a lattice point.
fn hash_unit(seed: u64, x: usize, y: usize, t: u64) -> f64 {
    let h = splitmix(seed ^ splitmix((x as u64) << 32 ^ y as u64 ^ splitmix(t)));
    (h >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

struct Block {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    yuv: [f64; 3],
}

pub(super) struct SceneRenderer {
    width: usize,
    height: usize,
    length: usize,
    /// Frames of the incoming transition rendered before the scene proper.
    offset: usize,
    seed: u64,
    base: [f64; 3],
    pattern: Pattern,
    blocks: Vec<Block>,
    pan: Option<(usize, f64)>,
    flashes: Vec<(usize, usize, f64)>,
}

impl SceneRenderer {
    pub(super) fn new(spec: &SequenceSpec, index: usize, scene: &SceneSpec) -> Self {
        let seed = splitmix(spec.seed ^ splitmix(index as u64 + 1));
        let [r, g, b] = scene.color;
        let base = yuv_from_rgb(r, g, b).map(f64::from);
        let mut blocks = Vec::new();
        if let Pattern::MovingBlocks { velocity } = scene.pattern {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..3 {
                let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let c: [u8; 3] = rng.gen();
                blocks.push(Block {
                    x: rng.gen_range(0.0..spec.width as f64),
                    y: rng.gen_range(0.0..spec.height as f64),
                    vx: velocity * angle.cos(),
                    vy: velocity * angle.sin(),
                    yuv: yuv_from_rgb(c[0], c[1], c[2]).map(f64::from),
                });
            }
        }
        let mut pan = None;
        let mut flashes = Vec::new();
        for d in spec.distractors.iter().filter(|d| d.scene == index) {
            match d.kind {
                DistractorKind::Pan { velocity } => pan = Some((d.position, velocity)),
                DistractorKind::Flash { frames, intensity } => flashes.push((d.position, frames, intensity)),
            }
        }
        let offset = if index == 0 {
            0
        } else {
            spec.transitions[index - 1].frames()
        };
        SceneRenderer {
            width: spec.width,
            height: spec.height,
            length: scene.length,
            offset,
            seed,
            base,
            pattern: scene.pattern.clone(),
            blocks,
            pan,
            flashes,
        }
    }

    pub(super) fn length(&self) -> usize {
        self.length
    }

    fn pixel(&self, x: usize, y: usize, t: usize) -> [f64; 3] {
        let (w, h) = (self.width as f64, self.height as f64);
        let [y0, u0, v0] = self.base;
        match self.pattern {
            Pattern::Solid => self.base,
            Pattern::Gradient => {
                let fx = x as f64 / w - 0.5;
                let fy = y as f64 / h - 0.5;
                [y0 + 50.0 * fx + 20.0 * fy, u0 + 12.0 * fx, v0 - 12.0 * fy]
            }
            Pattern::Noise { seed, amplitude } => {
                let texture = amplitude * hash_unit(seed ^ self.seed, x, y, u64::MAX);
                [y0 + texture, u0 + texture / 4.0, v0 - texture / 4.0]
            }
            Pattern::MovingBlocks { .. } => {
                let t = t as f64;
                let (bw, bh) = (w / 4.0, h / 4.0);
                let mut px = [y0 + 10.0 * (y as f64 / h - 0.5), u0, v0];
                for b in &self.blocks {
                    let dx = (x as f64 - (b.x + b.vx * t)).rem_euclid(w);
                    let dy = (y as f64 - (b.y + b.vy * t)).rem_euclid(h);
                    if dx < bw && dy < bh {
                        px = b.yuv;
                    }
                }
                px
            }
        }
    }

    /// Renders frame `k` of the scene: negative during the incoming
    /// transition, at or past `length` during the outgoing one.
    pub(super) fn render(&self, k: i64) -> Frame {
        let t = (k + self.offset as i64).max(0) as usize;
        let (w, h) = (self.width, self.height);
        let shift = match self.pan {
            Some((pos, v)) if k >= pos as i64 => (v * (k - pos as i64) as f64).floor() as i64,
            _ => 0,
        };
        let grain = match self.pattern {
            Pattern::Noise { seed, amplitude } => Some((seed ^ self.seed, amplitude / 4.0)),
            _ => None,
        };
        let mut full = vec![[0.0f64; 3]; w * h];
        for y in 0..h {
            for x in 0..w {
                let sx = (x as i64 + shift).rem_euclid(w as i64) as usize;
                let mut p = self.pixel(sx, y, t);
                if let Some((seed, amp)) = grain {
                    p[0] += amp * hash_unit(seed, x, y, t as u64);
                }
                full[y * w + x] = p;
            }
        }
        let (cw, ch) = Chroma::C420.plane_dims(w, h);
        let mut luma: Vec<f64> = full.iter().map(|p| p[0]).collect();
        let mut u = vec![0.0; cw * ch];
        let mut v = vec![0.0; cw * ch];
        for cy in 0..ch {
            for cx in 0..cw {
                let (mut su, mut sv, mut n) = (0.0, 0.0, 0.0);
                for y in 2 * cy..(2 * cy + 2).min(h) {
                    for x in 2 * cx..(2 * cx + 2).min(w) {
                        su += full[y * w + x][1];
                        sv += full[y * w + x][2];
                        n += 1.0;
                    }
                }
                u[cy * cw + cx] = su / n;
                v[cy * cw + cx] = sv / n;
            }
        }
        for &(pos, n, intensity) in &self.flashes {
            if k >= pos as i64 && k < (pos + n) as i64 {
                for l in luma.iter_mut() {
                    *l += (255.0 - l.clamp(0.0, 255.0)) * intensity;
                }
                for c in u.iter_mut().chain(v.iter_mut()) {
                    *c = 128.0 + (*c - 128.0) * (1.0 - intensity);
                }
            }
        }
        let q = |p: Vec<f64>| p.into_iter().map(to_u8).collect::<Vec<u8>>();
        Frame::from_planes(0, w, h, Chroma::C420, q(luma), q(u), q(v)).expect("rendered geometry")
    }
}

/// Blended frame `j` (1-based) of a `d`-frame transition from `a` to `b`.
pub(super) fn blend(a: &Frame, b: &Frame, transition: TransitionSpec, j: usize) -> Frame {
    let d = transition.frames();
    let alpha = j as f64 / (d + 1) as f64;
    let (w, h) = (a.width(), a.height());
    let planes = [(a.y(), b.y(), 0usize), (a.u(), b.u(), 1), (a.v(), b.v(), 2)];
    let mut out: Vec<Vec<u8>> = Vec::with_capacity(3);
    for (pa, pb, c) in planes {
        let plane = match transition {
            TransitionSpec::Cut => pb.to_vec(),
            TransitionSpec::Dissolve { .. } => pa
                .iter()
                .zip(pb)
                .map(|(&x, &y)| to_u8((1.0 - alpha) * f64::from(x) + alpha * f64::from(y)))
                .collect(),
            TransitionSpec::Fade { .. } => {
                let (src, f) = if alpha < 0.5 {
                    (pa, 1.0 - 2.0 * alpha)
                } else {
                    (pb, 2.0 * alpha - 1.0)
                };
                src.iter()
                    .map(|&x| to_u8(BLACK[c] + (f64::from(x) - BLACK[c]) * f))
                    .collect()
            }
            TransitionSpec::Wipe { .. } => {
                let boundary = round_half_up(w as f64 * alpha) as usize;
                let (pw, sx) = if c == 0 {
                    (w, 0)
                } else {
                    (Chroma::C420.plane_dims(w, h).0, 1)
                };
                pa.iter()
                    .zip(pb)
                    .enumerate()
                    .map(|(i, (&x, &y))| if ((i % pw) << sx) < boundary { y } else { x })
                    .collect()
            }
        };
        out.push(plane);
    }
    let v = out.pop().unwrap();
    let u = out.pop().unwrap();
    let y = out.pop().unwrap();
    Frame::from_planes(0, w, h, a.chroma(), y, u, v).expect("blend geometry")
}
