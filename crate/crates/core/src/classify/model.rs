use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::events::EventKind;
use crate::metrics::{FeatureSchema, FeatureVector};

pub const MODEL_VERSION: u32 = 1;

/// Probabilities are kept strictly inside (0, 1).
const P_EPS: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        weight: f64,
    },
    /// Samples with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(weight: f64) -> Self {
        TreeNode::Leaf { weight }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x[*feature] < *threshold { left } else { right },
            }
        }
    }

    /// Visits every split as `(feature, gain)`.
    pub fn for_each_split(&self, f: &mut impl FnMut(usize, f64)) {
        if let TreeNode::Split {
            feature,
            gain,
            left,
            right,
            ..
        } = self
        {
            f(*feature, *gain);
            left.for_each_split(f);
            right.for_each_split(f);
        }
    }

    fn for_each_node(&self, f: &mut impl FnMut(&TreeNode)) {
        f(self);
        if let TreeNode::Split { left, right, .. } = self {
            left.for_each_node(f);
            right.for_each_node(f);
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

pub fn logistic(score: f64) -> f64 {
    let p = if score >= 0.0 {
        1.0 / (1.0 + (-score).exp())
    } else {
        let e = score.exp();
        e / (1.0 + e)
    };
    p.clamp(P_EPS, 1.0 - P_EPS)
}

/// Boosted ensemble of regression trees scoring one transition class.
#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    pub trees: Vec<TreeNode>,
    pub learning_rate: f64,
    /// Initial log-odds.
    pub base_score: f64,
    pub schema: Arc<FeatureSchema>,
    pub class_tag: EventKind,
}

impl GbdtModel {
    /// Pre-logistic score for a raw value slice in schema order.
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.evaluate(x)).sum::<f64>()
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<f64, ClassifyError> {
        self.check_schema(&x.schema)?;
        Ok(logistic(self.raw_score(&x.values)))
    }

    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<(), ClassifyError> {
        if schema.hash() != self.schema.hash() || schema.len() != self.schema.len() {
            return Err(ClassifyError::SchemaMismatch);
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_VERSION,
            class_tag: self.class_tag,
            learning_rate: self.learning_rate,
            base_score: self.base_score,
            schema: self.schema.names().to_vec(),
            schema_hash: format!("{:016x}", self.schema.hash()),
            trees: self.trees.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    /// Parses and validates a model document.
    pub fn from_json(text: &str) -> Result<Self, ClassifyError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| ClassifyError::ModelFormat(e.to_string()))?;
        if file.version != MODEL_VERSION {
            return Err(ClassifyError::ModelFormat(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        let schema = FeatureSchema::from_names(file.schema);
        if file.schema_hash != format!("{:016x}", schema.hash()) {
            return Err(ClassifyError::ModelFormat("schema_hash does not match schema".into()));
        }
        if !file.learning_rate.is_finite() || !file.base_score.is_finite() {
            return Err(ClassifyError::ModelFormat("non-finite model parameter".into()));
        }
        let mut problem = None;
        for tree in &file.trees {
            tree.for_each_node(&mut |node| match node {
                TreeNode::Leaf { weight } if !weight.is_finite() => problem = Some("non-finite leaf weight"),
                TreeNode::Split {
                    feature,
                    threshold,
                    gain,
                    ..
                } => {
                    if *feature >= schema.len() {
                        problem = Some("split feature index outside the schema");
                    } else if !threshold.is_finite() || !gain.is_finite() {
                        problem = Some("non-finite split");
                    }
                }
                _ => {}
            });
        }
        if let Some(p) = problem {
            return Err(ClassifyError::ModelFormat(p.into()));
        }
        Ok(GbdtModel {
            trees: file.trees,
            learning_rate: file.learning_rate,
            base_score: file.base_score,
            schema: Arc::new(schema),
            class_tag: file.class_tag,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    class_tag: EventKind,
    learning_rate: f64,
    base_score: f64,
    schema: Vec<String>,
    schema_hash: String,
    trees: Vec<TreeNode>,
}
