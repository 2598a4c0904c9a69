//! Event-level precision, recall and F1 against ground truth.

use std::ops::AddAssign;

use serde::Serialize;
use thiserror::Error;

use crate::events::{is_sorted, BoundaryEvent, EventKind};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{0} events are not sorted by position")]
    UnsortedInput(&'static str),
    #[error("elapsed time must be positive")]
    ZeroElapsed,
}

/// Default matching tolerance in frames.
pub const DEFAULT_TOLERANCE: usize = 2;

fn intersects(a: (usize, usize), b: (i64, i64)) -> bool {
    a.0 as i64 <= b.1 && a.1 as i64 >= b.0
}

fn eligible(gt: &BoundaryEvent, pred: &BoundaryEvent, tol: usize) -> bool {
    let tol = tol as i64;
    let window = (gt.start as i64 - tol, gt.end as i64 + tol);
    match (gt.kind, pred.kind) {
        (EventKind::Cut, EventKind::Cut) => (pred.start as i64 - gt.start as i64).abs() <= tol,
        _ => intersects((pred.start, pred.end), window),
    }
}

/// One-to-one assignment of predictions to ground-truth events.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub gt: Vec<BoundaryEvent>,
    pub pred: Vec<BoundaryEvent>,
    /// `(gt index, pred index)` pairs.
    pub pairs: Vec<(usize, usize)>,
}

/// Greedy matching in increasing frame order: each prediction takes the
/// earliest unmatched ground-truth event it is eligible for. A cut matches
/// a cut within `tol` frames; anything involving a gradual transition
/// matches when the predicted span meets the ground-truth span widened by
/// `tol` on both sides.
pub fn match_events(gt: &[BoundaryEvent], pred: &[BoundaryEvent], tol: usize) -> Result<Matching, EvalError> {
    if !is_sorted(gt) {
        return Err(EvalError::UnsortedInput("ground-truth"));
    }
    if !is_sorted(pred) {
        return Err(EvalError::UnsortedInput("predicted"));
    }
    let mut taken = vec![false; gt.len()];
    let mut pairs = Vec::new();
    for (pi, p) in pred.iter().enumerate() {
        let hit = gt
            .iter()
            .enumerate()
            .find(|(gi, g)| !taken[*gi] && eligible(g, p, tol))
            .map(|(gi, _)| gi);
        if let Some(gi) = hit {
            taken[gi] = true;
            pairs.push((gi, pi));
        }
    }
    Ok(Matching {
        gt: gt.to_vec(),
        pred: pred.to_vec(),
        pairs,
    })
}

/// True/false positive and false negative counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        self.true_positives += o.true_positives;
        self.false_positives += o.false_positives;
        self.false_negatives += o.false_negatives;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scores {
    #[serde(flatten)]
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    /// `0/0` precision and recall are 1; F1 is 0 when precision and recall
    /// are both 0.
    pub fn from_counts(counts: Counts) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let precision = ratio(counts.true_positives, counts.true_positives + counts.false_positives);
        let recall = ratio(counts.true_positives, counts.true_positives + counts.false_negatives);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Scores {
            counts,
            precision,
            recall,
            f1,
        }
    }
}

/// Counts split by kind. Per-kind true positives and false negatives follow
/// the ground-truth kind; false positives follow the predicted kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub overall: Counts,
    pub cut: Counts,
    pub gradual: Counts,
    /// Matches whose predicted kind differs from the ground-truth kind.
    pub kind_mismatches: usize,
}

impl AddAssign for Tally {
    fn add_assign(&mut self, o: Tally) {
        self.overall += o.overall;
        self.cut += o.cut;
        self.gradual += o.gradual;
        self.kind_mismatches += o.kind_mismatches;
    }
}

impl Tally {
    pub fn from_matching(m: &Matching) -> Self {
        let mut t = Tally::default();
        let mut gt_hit = vec![false; m.gt.len()];
        let mut pred_hit = vec![false; m.pred.len()];
        for &(gi, pi) in &m.pairs {
            gt_hit[gi] = true;
            pred_hit[pi] = true;
            t.overall.true_positives += 1;
            t.kind_counts(m.gt[gi].kind).true_positives += 1;
            if m.gt[gi].kind != m.pred[pi].kind {
                t.kind_mismatches += 1;
            }
        }
        for (g, hit) in m.gt.iter().zip(gt_hit) {
            if !hit {
                t.overall.false_negatives += 1;
                t.kind_counts(g.kind).false_negatives += 1;
            }
        }
        for (p, hit) in m.pred.iter().zip(pred_hit) {
            if !hit {
                t.overall.false_positives += 1;
                t.kind_counts(p.kind).false_positives += 1;
            }
        }
        t
    }

    fn kind_counts(&mut self, kind: EventKind) -> &mut Counts {
        match kind {
            EventKind::Cut => &mut self.cut,
            EventKind::Gradual => &mut self.gradual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub overall: Scores,
    pub cut: Scores,
    pub gradual: Scores,
    pub kind_mismatches: usize,
    pub frames: usize,
    /// Frames per wall-clock second, when timing was measured.
    pub fps: Option<f64>,
}

impl EvalReport {
    pub fn from_tally(t: &Tally) -> Self {
        EvalReport {
            overall: Scores::from_counts(t.overall),
            cut: Scores::from_counts(t.cut),
            gradual: Scores::from_counts(t.gradual),
            kind_mismatches: t.kind_mismatches,
            frames: 0,
            fps: None,
        }
    }

    pub fn with_throughput(mut self, frames: usize, fps: Option<f64>) -> Self {
        self.frames = frames;
        self.fps = fps;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn score(m: &Matching) -> EvalReport {
    EvalReport::from_tally(&Tally::from_matching(m))
}

/// Frames per second.
pub fn throughput(frame_count: usize, elapsed_secs: f64) -> Result<f64, EvalError> {
    if frame_count == 0 {
        return Ok(0.0);
    }
    if elapsed_secs.is_nan() || elapsed_secs <= 0.0 {
        return Err(EvalError::ZeroElapsed);
    }
    Ok(frame_count as f64 / elapsed_secs)
}

/// Plain-text table with one row per method.
pub fn format_table(rows: &[(&str, &EvalReport)]) -> String {
    let width = rows
        .iter()
        .map(|(name, _)| name.len())
        .max()
        .unwrap_or(0)
        .max("Method".len());
    let mut out = format!(
        "{:<width$}  {:>11}  {:>8}  {:>9}  {:>8}\n",
        "Method", "Speed (FPS)", "F score", "Precision", "Recall"
    );
    for (name, r) in rows {
        let speed = r.fps.map_or_else(|| "-".to_owned(), |f| format!("{f:.1}"));
        out += &format!(
            "{:<width$}  {:>11}  {:>8.4}  {:>9.4}  {:>8.4}\n",
            name, speed, r.overall.f1, r.overall.precision, r.overall.recall
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(tp: usize, fp: usize, fnn: usize) -> Counts {
        Counts {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fnn,
        }
    }

    #[test]
    fn cut_within_tolerance() {
        let m = match_events(&[BoundaryEvent::cut(100, 1.0)], &[BoundaryEvent::cut(101, 0.9)], 2).unwrap();
        assert_eq!(Tally::from_matching(&m).overall, counts(1, 0, 0));
        let m = match_events(&[BoundaryEvent::cut(100, 1.0)], &[BoundaryEvent::cut(105, 0.9)], 2).unwrap();
        assert_eq!(Tally::from_matching(&m).overall, counts(0, 1, 1));
    }

    #[test]
    fn cut_inside_gradual_is_kind_mismatch() {
        let m = match_events(
            &[BoundaryEvent::gradual(40, 50, 1.0)],
            &[BoundaryEvent::cut(45, 0.9)],
            2,
        )
        .unwrap();
        let t = Tally::from_matching(&m);
        assert_eq!(t.overall, counts(1, 0, 0));
        assert_eq!(t.kind_mismatches, 1);
        assert_eq!(t.gradual.true_positives, 1);
        // the widened window reaches 38..=52 only
        let m = match_events(
            &[BoundaryEvent::gradual(40, 50, 1.0)],
            &[BoundaryEvent::cut(53, 0.9)],
            2,
        )
        .unwrap();
        assert!(m.pairs.is_empty());
    }

    #[test]
    fn zero_tolerance_is_exact() {
        let gt = [BoundaryEvent::cut(10, 1.0)];
        assert_eq!(
            match_events(&gt, &[BoundaryEvent::cut(11, 1.0)], 0)
                .unwrap()
                .pairs
                .len(),
            0
        );
        assert_eq!(
            match_events(&gt, &[BoundaryEvent::cut(10, 1.0)], 0)
                .unwrap()
                .pairs
                .len(),
            1
        );
    }

    #[test]
    fn one_to_one() {
        let gt = [BoundaryEvent::cut(10, 1.0)];
        let pred = [
            BoundaryEvent::cut(9, 1.0),
            BoundaryEvent::cut(10, 1.0),
            BoundaryEvent::cut(11, 1.0),
        ];
        let t = Tally::from_matching(&match_events(&gt, &pred, 2).unwrap());
        assert_eq!(t.overall, counts(1, 2, 0));
    }

    #[test]
    fn unsorted_input_rejected() {
        let ev = [BoundaryEvent::cut(10, 1.0), BoundaryEvent::cut(5, 1.0)];
        assert_eq!(match_events(&ev, &[], 2), Err(EvalError::UnsortedInput("ground-truth")));
        assert_eq!(match_events(&[], &ev, 2), Err(EvalError::UnsortedInput("predicted")));
    }

    #[test]
    fn score_conventions() {
        let s = Scores::from_counts(counts(1, 0, 0));
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let s = Scores::from_counts(counts(0, 0, 0));
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let s = Scores::from_counts(counts(90, 10, 10));
        assert_eq!((s.precision, s.recall), (0.9, 0.9));
        assert!((s.f1 - 0.9).abs() < 1e-15);
        let s = Scores::from_counts(counts(0, 3, 4));
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn throughput_examples() {
        assert_eq!(throughput(310, 10.0).unwrap(), 31.0);
        assert_eq!(throughput(0, 0.0).unwrap(), 0.0);
        assert_eq!(throughput(1000, 4.0).unwrap(), 250.0);
        assert_eq!(throughput(5, 0.0), Err(EvalError::ZeroElapsed));
    }

    #[test]
    fn table_layout() {
        let r = score(&match_events(&[], &[], 2).unwrap()).with_throughput(310, Some(31.0));
        let table = format_table(&[("proposed", &r)]);
        let lines: Vec<&str> = table.lines().collect();
        assert!(lines[0].starts_with("Method"));
        assert!(lines[1].contains("31.0") && lines[1].contains("1.0000"));
        assert!(r.to_json().contains("\"f1\": 1.0"));
    }
}
