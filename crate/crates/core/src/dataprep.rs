//! Annotation set construction: merge recall-tuned detector proposals into
//! short review segments, then turn observer votes into final labels.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{format_annotations, BoundaryEvent};

pub const SEGMENT_LENGTH: usize = 40;
pub const DEFAULT_MIN_SEPARATION: usize = 40;
pub const DEFAULT_MIN_VOTES: usize = 5;
pub const DEFAULT_MARGIN: usize = 2;

#[derive(Debug, Error)]
pub enum DataprepError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DataprepError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSegment {
    pub video_id: String,
    pub center: usize,
    pub start: usize,
    pub end: usize,
    /// Indices of the detector outputs that proposed a frame in this cluster.
    pub sources: Vec<usize>,
}

impl CandidateSegment {
    pub fn segment_id(&self) -> String {
        format!("{}_{:06}", self.video_id, self.center)
    }
}

/// Parses a detector output file: one frame ordinal per line, `#` comments
/// and blank lines ignored.
pub fn parse_frame_list(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(line.parse().map_err(|_| DataprepError::Parse {
            line: i + 1,
            message: format!("expected a frame ordinal, found `{line}`"),
        })?);
    }
    Ok(out)
}

/// A `SEGMENT_LENGTH`-frame window around `center`, shifted (not shrunk) to
/// stay inside the stream; shorter only when the stream itself is shorter.
pub fn segment_span(center: usize, video_length: usize) -> (usize, usize) {
    if video_length <= SEGMENT_LENGTH {
        return (0, video_length.saturating_sub(1));
    }
    let start = center
        .saturating_sub(SEGMENT_LENGTH / 2)
        .min(video_length - SEGMENT_LENGTH);
    (start, start + SEGMENT_LENGTH - 1)
}

/// Unions the proposals of several detectors and clusters frames closer
/// than `min_separation`. Each cluster becomes one candidate at its median
/// frame (lower-middle average for even sizes). Proposals past the end of
/// the stream are dropped.
pub fn merge_candidates(
    video_id: &str,
    detector_outputs: &[Vec<usize>],
    video_length: usize,
    min_separation: usize,
) -> Vec<CandidateSegment> {
    let mut proposals: Vec<(usize, usize)> = detector_outputs
        .iter()
        .enumerate()
        .flat_map(|(d, frames)| frames.iter().map(move |&f| (f, d)))
        .filter(|&(f, _)| f < video_length)
        .collect();
    proposals.sort_unstable();

    let mut clusters: Vec<Vec<(usize, usize)>> = Vec::new();
    for p in proposals {
        match clusters.last_mut() {
            Some(c) if p.0 - c.last().unwrap().0 < min_separation => c.push(p),
            _ => clusters.push(vec![p]),
        }
    }

    clusters
        .into_iter()
        .map(|c| {
            let mut frames: Vec<usize> = c.iter().map(|p| p.0).collect();
            frames.dedup();
            let n = frames.len();
            let center = if n % 2 == 1 {
                frames[n / 2]
            } else {
                (frames[n / 2 - 1] + frames[n / 2]) / 2
            };
            let mut sources: Vec<usize> = c.iter().map(|p| p.1).collect();
            sources.sort_unstable();
            sources.dedup();
            let (start, end) = segment_span(center, video_length);
            CandidateSegment {
                video_id: video_id.to_string(),
                center,
                start,
                end,
                sources,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteStatus {
    Accepted,
    Rejected,
    NeedsMore,
}

impl VoteStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            VoteStatus::Accepted => "accepted",
            VoteStatus::Rejected => "rejected",
            VoteStatus::NeedsMore => "needs_more",
        }
    }
}

/// Decision once at least `min_votes` judgments are in and one side leads
/// by `margin` or more.
pub fn aggregate_votes(votes: &[bool], min_votes: usize, margin: usize) -> VoteStatus {
    let yes = votes.iter().filter(|&&v| v).count();
    let no = votes.len() - yes;
    if votes.len() < min_votes {
        VoteStatus::NeedsMore
    } else if yes >= no + margin {
        VoteStatus::Accepted
    } else if no >= yes + margin {
        VoteStatus::Rejected
    } else {
        VoteStatus::NeedsMore
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteRecord {
    pub segment_id: String,
    pub votes: Vec<bool>,
    pub status: VoteStatus,
}

/// Annotation file with one `cut` per distinct accepted center, sorted. An
/// empty input yields the header comment alone.
pub fn finalize_annotations(accepted_centers: &[usize]) -> String {
    let mut centers = accepted_centers.to_vec();
    centers.sort_unstable();
    centers.dedup();
    let events: Vec<BoundaryEvent> = centers.into_iter().map(|c| BoundaryEvent::cut(c, 1.0)).collect();
    format!("# shot boundary annotations\n{}", format_annotations(&events))
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    segment_id: String,
    video_id: String,
    start: usize,
    end: usize,
    center: usize,
}

/// Review task manifest: `segment_id,video_id,start,end,center`.
pub fn write_manifest<W: Write>(segments: &[CandidateSegment], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for s in segments {
        w.serialize(ManifestRow {
            segment_id: s.segment_id(),
            video_id: s.video_id.clone(),
            start: s.start,
            end: s.end,
            center: s.center,
        })?;
    }
    if segments.is_empty() {
        w.write_record(["segment_id", "video_id", "start", "end", "center"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest<R: Read>(source: R) -> Result<Vec<CandidateSegment>> {
    let mut r = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for row in r.deserialize() {
        let row: ManifestRow = row?;
        if row.start > row.end || row.center < row.start || row.center > row.end {
            return Err(DataprepError::Parse {
                line: out.len() + 2,
                message: format!("segment {} has an inconsistent span", row.segment_id),
            });
        }
        out.push(CandidateSegment {
            video_id: row.video_id,
            center: row.center,
            start: row.start,
            end: row.end,
            sources: Vec::new(),
        });
    }
    Ok(out)
}

fn parse_judgment(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "y" | "yes" | "1" | "true" => Some(true),
        "n" | "no" | "0" | "false" => Some(false),
        _ => None,
    }
}

/// Reads `segment_id,judgment` rows and groups judgments per segment in
/// file order.
pub fn read_votes<R: Read>(source: R) -> Result<BTreeMap<String, Vec<bool>>> {
    let mut r = csv::Reader::from_reader(source);
    let mut out: BTreeMap<String, Vec<bool>> = BTreeMap::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let line = i + 2;
        if row.len() != 2 {
            return Err(DataprepError::Parse {
                line,
                message: "expected segment_id,judgment".into(),
            });
        }
        let vote = parse_judgment(&row[1]).ok_or_else(|| DataprepError::Parse {
            line,
            message: format!("unrecognized judgment `{}`", &row[1]),
        })?;
        out.entry(row[0].trim().to_string()).or_default().push(vote);
    }
    Ok(out)
}

pub fn vote_records(votes: &BTreeMap<String, Vec<bool>>, min_votes: usize, margin: usize) -> Vec<VoteRecord> {
    votes
        .iter()
        .map(|(id, v)| VoteRecord {
            segment_id: id.clone(),
            votes: v.clone(),
            status: aggregate_votes(v, min_votes, margin),
        })
        .collect()
}

/// Accepted candidate centers per video, for segments in `manifest` whose
/// votes reached acceptance. Votes for unknown segments are ignored.
pub fn accepted_centers(manifest: &[CandidateSegment], records: &[VoteRecord]) -> BTreeMap<String, Vec<usize>> {
    let by_id: BTreeMap<String, &CandidateSegment> = manifest.iter().map(|s| (s.segment_id(), s)).collect();
    let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.status == VoteStatus::Accepted) {
        if let Some(s) = by_id.get(&r.segment_id) {
            out.entry(s.video_id.clone()).or_default().push(s.center);
        }
    }
    out
}
