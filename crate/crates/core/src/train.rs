//! Labeled datasets and gradient-boosted tree training.
//!
//! Trees are grown with exact greedy splits on second-order logistic
//! statistics: for gradients `g = p - y` and hessians `h = p (1 - p)` the
//! gain of splitting a node into left and right children is
//!
//! ```text
//! gain = 1/2 [ G_L^2 / (H_L + lambda) + G_R^2 / (H_R + lambda) - G^2 / (H + lambda) ]
//! ```
//!
//! and a leaf takes the weight `-G / (H + lambda)`.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classify::{detect, logistic, Arbitration, ClassifyError, GbdtModel, PostfilterParams, TreeNode};
use crate::evaluate::{match_events, EvalError, EvalReport, Tally};
use crate::events::{sort_events, BoundaryEvent, EventKind};
use crate::metrics::{FeatureSchema, FeatureTrack, FeatureVector};

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("annotation {event} lies outside video `{video}` of {frames} frames")]
    AnnotationOutOfRange {
        video: String,
        event: String,
        frames: usize,
    },
    #[error("no annotated transitions in the training data")]
    EmptyAnnotation,
    #[error("training data for class {0} contains a single class")]
    DegenerateData(EventKind),
    #[error("cross-validation needs at least {k} distinct videos, found {found}")]
    TooFewGroups { k: usize, found: usize },
    #[error("samples use different feature schemas")]
    SchemaMismatch,
    #[error("invalid training parameter: {0}")]
    InvalidParam(&'static str),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    None,
    Cut,
    Gradual,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::None => "none",
            Label::Cut => "cut",
            Label::Gradual => "gradual",
        }
    }

    fn is(self, kind: EventKind) -> bool {
        matches!(
            (self, kind),
            (Label::Cut, EventKind::Cut) | (Label::Gradual, EventKind::Gradual)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: FeatureVector,
    pub label: Label,
    pub video_id: String,
    pub frame: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub l2_lambda: f64,
    /// Negatives kept per positive sample.
    pub negative_subsample_ratio: f64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            n_trees: 100,
            max_depth: 4,
            learning_rate: 0.1,
            min_samples_leaf: 5,
            l2_lambda: 1.0,
            negative_subsample_ratio: 5.0,
            seed: 0,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_depth == 0 || self.min_samples_leaf == 0 {
            return Err(TrainError::InvalidParam(
                "tree count, depth and leaf size must be positive",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::InvalidParam("learning rate must be positive"));
        }
        if self.l2_lambda.is_nan() || self.l2_lambda <= 0.0 {
            return Err(TrainError::InvalidParam("l2 lambda must be positive"));
        }
        if self.negative_subsample_ratio.is_nan() || self.negative_subsample_ratio <= 0.0 {
            return Err(TrainError::InvalidParam("negative subsample ratio must be positive"));
        }
        Ok(())
    }
}

/// One annotated video after feature extraction.
#[derive(Debug, Clone)]
pub struct LabeledVideo {
    pub id: String,
    pub track: FeatureTrack,
    pub truth: Vec<BoundaryEvent>,
}

/// Per-frame labels: every frame of a gradual span is gradual, annotated
/// cut frames are cuts (a cut inside a span wins).
pub fn frame_labels(video: &str, truth: &[BoundaryEvent], frames: usize) -> Result<Vec<Label>> {
    let mut labels = vec![Label::None; frames];
    for e in truth {
        if e.end >= frames {
            return Err(TrainError::AnnotationOutOfRange {
                video: video.to_owned(),
                event: e.annotation_line(),
                frames,
            });
        }
    }
    for e in truth.iter().filter(|e| e.kind == EventKind::Gradual) {
        labels[e.start..=e.end].fill(Label::Gradual);
    }
    for e in truth.iter().filter(|e| e.kind == EventKind::Cut) {
        labels[e.start] = Label::Cut;
    }
    Ok(labels)
}

/// Labels every frame, keeps every positive and a seeded random subset of
/// `ratio * positives` negatives, in stream order.
pub fn assemble_dataset(videos: &[LabeledVideo], params: &TrainParams) -> Result<Vec<LabeledSample>> {
    params.validate()?;
    let mut all = Vec::new();
    for v in videos {
        let labels = frame_labels(&v.id, &v.truth, v.track.len())?;
        for (x, label) in v.track.vectors.iter().zip(labels) {
            all.push((v, x, label));
        }
    }
    let positives = all.iter().filter(|(_, _, l)| *l != Label::None).count();
    if positives == 0 {
        return Err(TrainError::EmptyAnnotation);
    }
    let mut negatives: Vec<usize> = (0..all.len()).filter(|&i| all[i].2 == Label::None).collect();
    let keep = ((params.negative_subsample_ratio * positives as f64).round() as usize).min(negatives.len());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    negatives.shuffle(&mut rng);
    let kept: BTreeSet<usize> = negatives[..keep].iter().copied().collect();
    Ok(all
        .into_iter()
        .enumerate()
        .filter(|(i, (_, _, l))| *l != Label::None || kept.contains(i))
        .map(|(_, (v, x, label))| LabeledSample {
            x: x.clone(),
            label,
            video_id: v.id.clone(),
            frame: x.center_index,
        })
        .collect())
}

/// Best split found for a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64) -> f64 {
    let (g, h) = (gl + gr, hl + hr);
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda))
}

struct Grower<'a> {
    columns: &'a [Vec<f64>],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a TrainParams,
}

impl Grower<'_> {
    /// Exact scan over every feature and every midpoint between distinct
    /// sorted values. Ties go to the lowest feature, then lowest threshold.
    fn best_split(&self, node: &[usize]) -> Option<SplitCandidate> {
        let lambda = self.params.l2_lambda;
        let min_leaf = self.params.min_samples_leaf;
        let g_total: f64 = node.iter().map(|&i| self.grad[i]).sum();
        let h_total: f64 = node.iter().map(|&i| self.hess[i]).sum();
        let mut best: Option<SplitCandidate> = None;
        let mut order = node.to_vec();
        for (f, col) in self.columns.iter().enumerate() {
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            let (mut gl, mut hl) = (0.0, 0.0);
            for pos in 0..order.len() - 1 {
                let i = order[pos];
                gl += self.grad[i];
                hl += self.hess[i];
                let (lo, hi) = (col[i], col[order[pos + 1]]);
                let left_n = pos + 1;
                if lo == hi || left_n < min_leaf || order.len() - left_n < min_leaf {
                    continue;
                }
                let gain = split_gain(gl, hl, g_total - gl, h_total - hl, lambda);
                if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold <= lo {
                        threshold = hi;
                    }
                    best = Some(SplitCandidate {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn leaf(&self, node: &[usize]) -> TreeNode {
        let g: f64 = node.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = node.iter().map(|&i| self.hess[i]).sum();
        TreeNode::leaf(-g / (h + self.params.l2_lambda))
    }

    fn grow(&self, node: &[usize], depth: usize, split: Option<SplitCandidate>) -> TreeNode {
        let split = match split {
            Some(s) if depth < self.params.max_depth => s,
            _ => return self.leaf(node),
        };
        let col = &self.columns[split.feature];
        let (left, right): (Vec<usize>, Vec<usize>) = node.iter().partition(|&&i| col[i] < split.threshold);
        let left_split = self.best_split(&left);
        let right_split = self.best_split(&right);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            gain: split.gain,
            left: Box::new(self.grow(&left, depth + 1, left_split)),
            right: Box::new(self.grow(&right, depth + 1, right_split)),
        }
    }
}

/// Mean logistic loss of scores against 0/1 targets.
pub fn log_loss(scores: &[f64], targets: &[f64]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(targets)
        .map(|(&s, &y)| {
            // log(1 + e^s) - y s, stable for large |s|
            let softplus = if s > 0.0 {
                s + (-s).exp().ln_1p()
            } else {
                s.exp().ln_1p()
            };
            softplus - y * s
        })
        .sum();
    total / scores.len() as f64
}

/// Root split chosen by the trainer for given gradients and hessians.
pub fn root_split(columns: &[Vec<f64>], grad: &[f64], hess: &[f64], params: &TrainParams) -> Option<SplitCandidate> {
    let grower = Grower {
        columns,
        grad,
        hess,
        params,
    };
    let all: Vec<usize> = (0..grad.len()).collect();
    grower.best_split(&all)
}

/// Trains a one-vs-rest model for `target` and returns it together with the
/// training log-loss before the first round and after every round.
pub fn train_gbdt_traced(
    samples: &[LabeledSample],
    target: EventKind,
    params: &TrainParams,
) -> Result<(GbdtModel, Vec<f64>)> {
    params.validate()?;
    let schema: Arc<FeatureSchema> = match samples.first() {
        Some(s) => s.x.schema.clone(),
        None => return Err(TrainError::DegenerateData(target)),
    };
    if samples.iter().any(|s| s.x.schema.hash() != schema.hash()) {
        return Err(TrainError::SchemaMismatch);
    }
    let targets: Vec<f64> = samples
        .iter()
        .map(|s| if s.label.is(target) { 1.0 } else { 0.0 })
        .collect();
    let n_pos = targets.iter().filter(|&&y| y == 1.0).count();
    let n_neg = targets.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(TrainError::DegenerateData(target));
    }
    let columns: Vec<Vec<f64>> = (0..schema.len())
        .map(|f| samples.iter().map(|s| s.x.values[f]).collect())
        .collect();

    let base_score = (n_pos as f64 / n_neg as f64).ln();
    let mut scores = vec![base_score; samples.len()];
    let mut losses = vec![log_loss(&scores, &targets)];
    let mut trees = Vec::with_capacity(params.n_trees);
    let all: Vec<usize> = (0..samples.len()).collect();
    let mut grad = vec![0.0; samples.len()];
    let mut hess = vec![0.0; samples.len()];
    for _ in 0..params.n_trees {
        for i in 0..samples.len() {
            let p = logistic(scores[i]);
            grad[i] = p - targets[i];
            hess[i] = p * (1.0 - p);
        }
        let grower = Grower {
            columns: &columns,
            grad: &grad,
            hess: &hess,
            params,
        };
        let Some(root) = grower.best_split(&all) else {
            break;
        };
        let tree = grower.grow(&all, 0, Some(root));
        for (i, s) in scores.iter_mut().enumerate() {
            *s += params.learning_rate * tree.evaluate(&samples[i].x.values);
        }
        losses.push(log_loss(&scores, &targets));
        trees.push(tree);
    }
    let model = GbdtModel {
        trees,
        learning_rate: params.learning_rate,
        base_score,
        schema,
        class_tag: target,
    };
    Ok((model, losses))
}

pub fn train_gbdt(samples: &[LabeledSample], target: EventKind, params: &TrainParams) -> Result<GbdtModel> {
    train_gbdt_traced(samples, target, params).map(|(m, _)| m)
}

/// Total split gain per feature, sorted descending (ties by schema order).
/// Every schema feature is listed, including those never split on.
pub fn feature_importance(model: &GbdtModel) -> Vec<(String, f64)> {
    let mut gains = vec![0.0; model.schema.len()];
    for tree in &model.trees {
        tree.for_each_split(&mut |f, g| gains[f] += g);
    }
    let mut ranked: Vec<(usize, f64)> = gains.into_iter().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .map(|(i, g)| (model.schema.names()[i].clone(), g))
        .collect()
}

/// Cut and gradual models trained on the same samples.
#[derive(Debug, Clone)]
pub struct ModelPair {
    pub cut: GbdtModel,
    pub gradual: GbdtModel,
}

pub fn train_models(videos: &[LabeledVideo], params: &TrainParams) -> Result<ModelPair> {
    let samples = assemble_dataset(videos, params)?;
    Ok(ModelPair {
        cut: train_gbdt(&samples, EventKind::Cut, params)?,
        gradual: train_gbdt(&samples, EventKind::Gradual, params)?,
    })
}

/// Detection settings used when scoring held-out videos.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectParams {
    pub arbitration: Arbitration,
    pub postfilter: PostfilterParams,
    pub tolerance: usize,
}

impl Default for DetectParams {
    fn default() -> Self {
        DetectParams {
            arbitration: Arbitration::default(),
            postfilter: PostfilterParams::default(),
            tolerance: crate::evaluate::DEFAULT_TOLERANCE,
        }
    }
}

/// Runs the trained pipeline on each video and pools the match counts.
pub fn evaluate_models(models: &ModelPair, videos: &[LabeledVideo], detect_params: &DetectParams) -> Result<Tally> {
    let mut tally = Tally::default();
    for v in videos {
        let pred = detect(
            &v.track,
            &models.cut,
            &models.gradual,
            &detect_params.arbitration,
            &detect_params.postfilter,
        )?;
        let mut truth = v.truth.clone();
        sort_events(&mut truth);
        tally += Tally::from_matching(&match_events(&truth, &pred, detect_params.tolerance)?);
    }
    Ok(tally)
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub held_out: Vec<String>,
    pub report: EvalReport,
}

#[derive(Debug, Clone)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    pub mean_f1: f64,
}

/// Assigns videos to `k` folds: distinct ids in sorted order, round robin.
pub fn fold_assignment(videos: &[LabeledVideo], k: usize) -> Result<Vec<usize>> {
    let ids: BTreeSet<&str> = videos.iter().map(|v| v.id.as_str()).collect();
    if k < 2 || ids.len() < k {
        return Err(TrainError::TooFewGroups { k, found: ids.len() });
    }
    let ids: Vec<&str> = ids.into_iter().collect();
    Ok(videos
        .iter()
        .map(|v| ids.iter().position(|&id| id == v.id).expect("id present") % k)
        .collect())
}

/// Grouped k-fold cross-validation: all frames of one video stay in one
/// fold. Each fold trains on the others and is scored at event level.
pub fn cross_validate(
    videos: &[LabeledVideo],
    params: &TrainParams,
    k: usize,
    detect_params: &DetectParams,
) -> Result<CvReport> {
    let assignment = fold_assignment(videos, k)?;
    let mut folds = Vec::with_capacity(k);
    for fold in 0..k {
        let (test, train): (Vec<_>, Vec<_>) = videos.iter().zip(&assignment).partition(|(_, &a)| a == fold);
        let train: Vec<LabeledVideo> = train.into_iter().map(|(v, _)| v.clone()).collect();
        let test: Vec<LabeledVideo> = test.into_iter().map(|(v, _)| v.clone()).collect();
        let models = train_models(&train, params)?;
        let tally = evaluate_models(&models, &test, detect_params)?;
        let mut held_out: Vec<String> = test.iter().map(|v| v.id.clone()).collect();
        held_out.dedup();
        folds.push(FoldResult {
            held_out,
            report: EvalReport::from_tally(&tally),
        });
    }
    let mean_f1 = folds.iter().map(|f| f.report.overall.f1).sum::<f64>() / k as f64;
    Ok(CvReport { folds, mean_f1 })
}
