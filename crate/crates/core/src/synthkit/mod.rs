//! Synthetic video with programmed transitions and exact ground truth.
//!
//! A sequence is a list of scenes joined by transitions (cut, dissolve,
//! fade through black, horizontal wipe). Distractors (flashes, camera pans)
//! alter frames inside a scene without producing ground-truth events. Cuts
//! are annotated at the first frame of the new scene; gradual transitions
//! span exactly their blended frames.

mod corpus;
mod render;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::BoundaryEvent;
use crate::frameio::{Chroma, Frame, FrameIoError, StreamInfo, Y4mWriter};

pub use corpus::benchmark_corpus;
pub use render::round_half_up;

pub const MIN_SIDE: usize = 32;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid sequence spec: {0}")]
    InvalidSpec(String),
    #[error("frame {0} does not match the stream geometry")]
    GeometryMismatch(usize),
    #[error(transparent)]
    Io(#[from] FrameIoError),
}

pub type Result<T> = std::result::Result<T, SynthError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Pattern {
    Solid,
    /// Diagonal luma ramp around the base color.
    Gradient,
    /// Static seeded texture plus per-frame grain of a quarter the amplitude.
    Noise {
        seed: u64,
        amplitude: f64,
    },
    /// Three colored rectangles drifting at `velocity` pixels per frame.
    MovingBlocks {
        velocity: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub length: usize,
    pub pattern: Pattern,
    /// Base color, RGB.
    pub color: [u8; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TransitionSpec {
    Cut,
    Dissolve {
        frames: usize,
    },
    /// Fade to black and back, black at the midpoint.
    Fade {
        frames: usize,
    },
    /// Vertical boundary sweeping left to right.
    Wipe {
        frames: usize,
    },
}

impl TransitionSpec {
    pub fn frames(&self) -> usize {
        match *self {
            TransitionSpec::Cut => 0,
            TransitionSpec::Dissolve { frames } | TransitionSpec::Fade { frames } | TransitionSpec::Wipe { frames } => {
                frames
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DistractorKind {
    /// `frames` consecutive frames pushed toward white by `intensity`.
    Flash { frames: usize, intensity: f64 },
    /// Content scrolls horizontally from the distractor position onward.
    Pan { velocity: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistractorSpec {
    /// Index of the scene the distractor lives in.
    pub scene: usize,
    /// Frame offset within that scene.
    pub position: usize,
    pub kind: DistractorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub name: String,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub seed: u64,
    pub scenes: Vec<SceneSpec>,
    /// `transitions[i]` joins scene `i` and scene `i + 1`.
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
    #[serde(default)]
    pub distractors: Vec<DistractorSpec>,
}

impl SequenceSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.width < MIN_SIDE || self.height < MIN_SIDE {
            return bad(format!(
                "geometry {}x{} is below {MIN_SIDE}x{MIN_SIDE}",
                self.width, self.height
            ));
        }
        if self.width > crate::frameio::MAX_DIMENSION || self.height > crate::frameio::MAX_DIMENSION {
            return bad("geometry is too large".into());
        }
        if self.scenes.is_empty() {
            return bad("no scenes".into());
        }
        if self.transitions.len() + 1 != self.scenes.len() {
            return bad(format!(
                "{} scenes need {} transitions, found {}",
                self.scenes.len(),
                self.scenes.len() - 1,
                self.transitions.len()
            ));
        }
        for (i, s) in self.scenes.iter().enumerate() {
            if s.length == 0 {
                return bad(format!("scene {i} is empty"));
            }
            match s.pattern {
                Pattern::Noise { amplitude, .. } if !(0.0..=255.0).contains(&amplitude) => {
                    return bad(format!("scene {i}: noise amplitude must be in [0, 255]"));
                }
                Pattern::MovingBlocks { velocity } if !velocity.is_finite() || velocity.abs() > 1e6 => {
                    return bad(format!("scene {i}: velocity must be finite"));
                }
                _ => {}
            }
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if *t != TransitionSpec::Cut && t.frames() < 2 {
                return bad(format!("transition {i}: gradual transitions need at least 2 frames"));
            }
        }
        for (i, d) in self.distractors.iter().enumerate() {
            let Some(scene) = self.scenes.get(d.scene) else {
                return bad(format!("distractor {i}: no scene {}", d.scene));
            };
            if d.position >= scene.length {
                return bad(format!("distractor {i}: position outside its scene"));
            }
            match d.kind {
                DistractorKind::Flash { frames, intensity } => {
                    if !(1..=3).contains(&frames) {
                        return bad(format!("distractor {i}: flash length must be 1..=3"));
                    }
                    if !(intensity > 0.0 && intensity <= 1.0) {
                        return bad(format!("distractor {i}: flash intensity must be in (0, 1]"));
                    }
                    if d.position + frames > scene.length {
                        return bad(format!("distractor {i}: flash runs past the end of its scene"));
                    }
                }
                DistractorKind::Pan { velocity } => {
                    if !velocity.is_finite() || velocity.abs() > 1e6 {
                        return bad(format!("distractor {i}: pan velocity must be finite"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn total_frames(&self) -> usize {
        self.scenes.iter().map(|s| s.length).sum::<usize>() + self.transitions.iter().map(|t| t.frames()).sum::<usize>()
    }

    pub fn stream_info(&self) -> StreamInfo {
        let mut info = StreamInfo::new(self.width, self.height, Chroma::C420);
        info.frame_count_hint = Some(self.total_frames());
        info
    }
}

/// Frames touched by a distractor in the generated stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistractorSpan {
    pub kind: DistractorKind,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticClip {
    pub info: StreamInfo,
    pub frames: Vec<Frame>,
    pub truth: Vec<BoundaryEvent>,
    pub distractors: Vec<DistractorSpan>,
}

/// Renders a sequence. Output is a pure function of the spec.
pub fn generate(spec: &SequenceSpec) -> Result<SyntheticClip> {
    spec.validate()?;
    let mut frames: Vec<Frame> = Vec::with_capacity(spec.total_frames());
    let mut truth = Vec::new();
    let mut distractors = Vec::new();
    let scenes: Vec<render::SceneRenderer> = spec
        .scenes
        .iter()
        .enumerate()
        .map(|(i, s)| render::SceneRenderer::new(spec, i, s))
        .collect();

    for (i, scene) in scenes.iter().enumerate() {
        if i > 0 {
            let prev = &scenes[i - 1];
            let transition = spec.transitions[i - 1];
            let start = frames.len();
            match transition {
                TransitionSpec::Cut => {
                    truth.push(BoundaryEvent::cut(start, 1.0));
                }
                t => {
                    let d = t.frames();
                    for j in 1..=d {
                        let a = prev.render((prev.length() + j - 1) as i64);
                        let b = scene.render(j as i64 - 1 - d as i64);
                        frames.push(render::blend(&a, &b, t, j).with_index(frames.len()));
                    }
                    truth.push(BoundaryEvent::gradual(start, start + d - 1, 1.0));
                }
            }
        }
        let first = frames.len();
        for k in 0..scene.length() {
            frames.push(scene.render(k as i64).with_index(frames.len()));
        }
        for d in spec.distractors.iter().filter(|d| d.scene == i) {
            let end = match d.kind {
                DistractorKind::Flash { frames: n, .. } => first + d.position + n - 1,
                DistractorKind::Pan { .. } => first + scene.length() - 1,
            };
            distractors.push(DistractorSpan {
                kind: d.kind,
                start: first + d.position,
                end,
            });
        }
    }
    distractors.sort_by_key(|d| d.start);
    Ok(SyntheticClip {
        info: spec.stream_info(),
        frames,
        truth,
        distractors,
    })
}

/// Writes frames as a YUV4MPEG2 stream. An empty list yields the header
/// only.
pub fn write_y4m<W: Write>(frames: &[Frame], info: &StreamInfo, sink: W) -> Result<W> {
    let mut writer = Y4mWriter::new(sink, info.clone())?;
    for f in frames {
        if f.width() != info.width || f.height() != info.height || f.chroma() != info.chroma {
            return Err(SynthError::GeometryMismatch(f.index()));
        }
        writer.write_frame(f)?;
    }
    Ok(writer.finish()?)
}

/// Parses a corpus manifest: a JSON array of sequence specs.
pub fn parse_manifest(text: &str) -> Result<Vec<SequenceSpec>> {
    let specs: Vec<SequenceSpec> =
        serde_json::from_str(text).map_err(|e| SynthError::InvalidSpec(format!("manifest: {e}")))?;
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}
