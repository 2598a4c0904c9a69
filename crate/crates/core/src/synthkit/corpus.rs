use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DistractorKind, DistractorSpec, Pattern, SceneSpec, SequenceSpec, TransitionSpec};
use crate::frameio::yuv_from_rgb;

const SEQUENCES: usize = 20;
const FRAMES_PER_SEQUENCE: usize = 2000;
const WIDTH: usize = 80;
const HEIGHT: usize = 60;
/// Minimum luma gap between the base colors of adjacent scenes.
const MIN_LUMA_STEP: i32 = 50;

/// The fixed benchmark corpus: 20 sequences of roughly 2000 frames at 80x60
/// with cuts, dissolves, fades, wipes, flashes and pans.
pub fn benchmark_corpus(seed: u64) -> Vec<SequenceSpec> {
    (0..SEQUENCES)
        .map(|i| {
            random_sequence(
                format!("seq{i:02}"),
                seed.wrapping_mul(1000).wrapping_add(i as u64),
                FRAMES_PER_SEQUENCE,
            )
        })
        .collect()
}

fn luma(c: [u8; 3]) -> i32 {
    i32::from(yuv_from_rgb(c[0], c[1], c[2])[0])
}

fn random_sequence(name: String, seed: u64, target_frames: usize) -> SequenceSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenes: Vec<SceneSpec> = Vec::new();
    let mut transitions = Vec::new();
    let mut total = 0;
    while total < target_frames {
        if !scenes.is_empty() {
            let t = match rng.gen_range(0..10) {
                0 => TransitionSpec::Dissolve {
                    frames: rng.gen_range(6..=14),
                },
                1 => TransitionSpec::Fade {
                    frames: rng.gen_range(6..=14),
                },
                2 => TransitionSpec::Wipe {
                    frames: rng.gen_range(6..=14),
                },
                _ => TransitionSpec::Cut,
            };
            total += t.frames();
            transitions.push(t);
        }
        let color = loop {
            let c: [u8; 3] = rng.gen();
            match scenes.last() {
                Some(prev) if (luma(prev.color) - luma(c)).abs() < MIN_LUMA_STEP => continue,
                _ => break c,
            }
        };
        let pattern = match rng.gen_range(0..20) {
            0..=2 => Pattern::Solid,
            3..=7 => Pattern::Gradient,
            8..=14 => Pattern::Noise {
                seed: rng.gen(),
                amplitude: rng.gen_range(8.0..30.0),
            },
            _ => Pattern::MovingBlocks {
                velocity: rng.gen_range(0.5..3.0),
            },
        };
        let length = rng.gen_range(60..=220);
        total += length;
        scenes.push(SceneSpec { length, pattern, color });
    }

    let mut distractors = Vec::new();
    let flashes = if rng.gen_bool(0.5) { 2 } else { 1 };
    let mut used = Vec::new();
    while used.len() < flashes {
        let scene = rng.gen_range(0..scenes.len());
        if used.contains(&scene) {
            continue;
        }
        used.push(scene);
        let len = scenes[scene].length;
        distractors.push(DistractorSpec {
            scene,
            position: rng.gen_range(12..len - 15),
            kind: DistractorKind::Flash {
                frames: rng.gen_range(1..=3),
                intensity: rng.gen_range(0.6..1.0),
            },
        });
    }
    let textured: Vec<usize> = (0..scenes.len())
        .filter(|&i| scenes[i].pattern != Pattern::Solid && !used.contains(&i))
        .collect();
    if !textured.is_empty() {
        let scene = textured[rng.gen_range(0..textured.len())];
        let speed = rng.gen_range(1.0..3.0);
        distractors.push(DistractorSpec {
            scene,
            position: rng.gen_range(5..scenes[scene].length / 2),
            kind: DistractorKind::Pan {
                velocity: if rng.gen_bool(0.5) { speed } else { -speed },
            },
        });
    }
    distractors.sort_by_key(|d| (d.scene, d.position));

    SequenceSpec {
        name,
        width: WIDTH,
        height: HEIGHT,
        seed,
        scenes,
        transitions,
        distractors,
    }
}
