//! Boundary events and their line-oriented text format.
//!
//! Annotation and detection files share one grammar, one event per line:
//!
//! ```text
//! # comment
//! cut <frame> [confidence]
//! grad <start> <end> [confidence]
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Cut,
    Gradual,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Cut => "cut",
            EventKind::Gradual => "gradual",
        })
    }
}

/// A cut at one frame (`start == end`) or a gradual transition spanning
/// `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEvent {
    pub kind: EventKind,
    pub start: usize,
    pub end: usize,
    pub confidence: f64,
}

impl BoundaryEvent {
    pub fn cut(frame: usize, confidence: f64) -> Self {
        BoundaryEvent {
            kind: EventKind::Cut,
            start: frame,
            end: frame,
            confidence,
        }
    }

    pub fn gradual(start: usize, end: usize, confidence: f64) -> Self {
        debug_assert!(start <= end);
        BoundaryEvent {
            kind: EventKind::Gradual,
            start,
            end,
            confidence,
        }
    }

    pub fn is_cut(&self) -> bool {
        self.kind == EventKind::Cut
    }

    /// Frames between the end of `self` and the start of `other`; zero or
    /// negative when they touch or overlap.
    pub fn gap_to(&self, other: &BoundaryEvent) -> i64 {
        other.start as i64 - self.end as i64
    }

    /// Detection line, confidence included.
    pub fn detection_line(&self) -> String {
        match self.kind {
            EventKind::Cut => format!("cut {} {:.6}", self.start, self.confidence),
            EventKind::Gradual => format!("grad {} {} {:.6}", self.start, self.end, self.confidence),
        }
    }

    /// Annotation line, no confidence.
    pub fn annotation_line(&self) -> String {
        match self.kind {
            EventKind::Cut => format!("cut {}", self.start),
            EventKind::Gradual => format!("grad {} {}", self.start, self.end),
        }
    }
}

/// Sorts by start frame, then end frame, then kind.
pub fn sort_events(events: &mut [BoundaryEvent]) {
    events.sort_by_key(|e| (e.start, e.end, e.kind));
}

pub fn is_sorted(events: &[BoundaryEvent]) -> bool {
    events
        .windows(2)
        .all(|w| (w[0].start, w[0].end) <= (w[1].start, w[1].end))
}

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct EventParseError {
    pub line: usize,
    pub message: String,
}

fn parse_frame(tok: Option<&str>, line: usize, what: &str) -> Result<usize, EventParseError> {
    let tok = tok.ok_or_else(|| EventParseError {
        line,
        message: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| EventParseError {
        line,
        message: format!("bad {what} `{tok}`"),
    })
}

/// Parses an annotation or detection file. A missing confidence is 1.
pub fn parse_events(text: &str) -> Result<Vec<BoundaryEvent>, EventParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let kind = toks.next().unwrap_or("");
        let (start, end) = match kind {
            "cut" => {
                let f = parse_frame(toks.next(), line, "frame")?;
                (f, f)
            }
            "grad" => {
                let s = parse_frame(toks.next(), line, "start frame")?;
                let e = parse_frame(toks.next(), line, "end frame")?;
                if s > e {
                    return Err(EventParseError {
                        line,
                        message: format!("span start {s} is after end {e}"),
                    });
                }
                (s, e)
            }
            other => {
                return Err(EventParseError {
                    line,
                    message: format!("unknown event kind `{other}`"),
                })
            }
        };
        let confidence = match toks.next() {
            None => 1.0,
            Some(tok) => match tok.parse::<f64>() {
                Ok(c) if (0.0..=1.0).contains(&c) => c,
                _ => {
                    return Err(EventParseError {
                        line,
                        message: format!("confidence `{tok}` is not in [0, 1]"),
                    })
                }
            },
        };
        if let Some(extra) = toks.next() {
            return Err(EventParseError {
                line,
                message: format!("unexpected trailing field `{extra}`"),
            });
        }
        out.push(BoundaryEvent {
            kind: if kind == "cut" {
                EventKind::Cut
            } else {
                EventKind::Gradual
            },
            start,
            end,
            confidence,
        });
    }
    Ok(out)
}

pub fn format_detections(events: &[BoundaryEvent]) -> String {
    events.iter().map(|e| e.detection_line() + "\n").collect()
}

pub fn format_annotations(events: &[BoundaryEvent]) -> String {
    events.iter().map(|e| e.annotation_line() + "\n").collect()
}
