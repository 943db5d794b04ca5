//! Gradient-boosted regression trees on logistic loss, exact greedy splits.
//!
//! Rows are sorted canonically before training, so the fitted model depends
//! only on the multiset of rows. Split ties go to the lowest feature index,
//! then the lowest threshold.

use serde::{Deserialize, Serialize};

use super::dataset::{dimension, FeatureRow};
use super::{base_log_odds, log_loss, sigmoid, Classifier};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub trees: usize,
    pub max_depth: usize,
    pub eta: f64,
    pub lambda: f64,
    pub min_child_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            trees: 100,
            max_depth: 6,
            eta: 0.1,
            lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 || self.max_depth == 0 {
            return Err(Error::Param("trees and depth must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Param(format!("learning rate {} must be positive", self.eta)));
        }
        if !(self.lambda >= 0.0) || !(self.min_child_weight >= 0.0) {
            return Err(Error::Param("lambda and min_child_weight must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: u32,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn eval(&self, x: &[u32]) -> f64 {
        match self {
            Node::Leaf { value } => *value,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.eval(x)
                } else {
                    right.eval(x)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub version: u32,
    pub params: GbtParams,
    pub n_features: usize,
    pub base_score: f64,
    /// Leaf values are unscaled; prediction multiplies their sum by `eta`.
    pub trees: Vec<Node>,
    /// Single-class training data: a constant model at the base rate.
    pub degenerate: bool,
    /// Mean training log-loss before the first round and after each round.
    pub train_loss: Vec<f64>,
}

impl GbtModel {
    pub fn margin(&self, x: &[u32]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.base_score + self.params.eta * self.trees.iter().map(|t| t.eval(x)).sum::<f64>())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: GbtModel = serde_json::from_str(s)?;
        if m.version != MODEL_FORMAT_VERSION {
            return Err(Error::Param(format!("unsupported model version {}", m.version)));
        }
        Ok(m)
    }
}

impl Classifier for GbtModel {
    fn predict(&self, x: &[u32]) -> Result<f64> {
        self.margin(x).map(sigmoid)
    }
}

struct Trainer<'a> {
    /// Column-major bin index of each row per feature.
    bins: &'a [Vec<u16>],
    /// Feature value of each bin, ascending.
    values: &'a [Vec<u32>],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbtParams,
}

struct Best {
    gain: f64,
    feature: usize,
    bin: usize,
}

impl Trainer<'_> {
    fn build(&self, rows: &[u32], depth: usize) -> Node {
        let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &r| {
            (g + self.grad[r as usize], h + self.hess[r as usize])
        });
        let leaf = Node::Leaf {
            value: -g / (h + self.params.lambda),
        };
        if depth >= self.params.max_depth || rows.len() < 2 {
            return leaf;
        }
        let lambda = self.params.lambda;
        let parent = g * g / (h + lambda);
        let mut best: Option<Best> = None;
        for (f, column) in self.bins.iter().enumerate() {
            let nb = self.values[f].len();
            let mut hist = vec![(0.0f64, 0.0f64, 0usize); nb];
            for &r in rows {
                let b = column[r as usize] as usize;
                hist[b].0 += self.grad[r as usize];
                hist[b].1 += self.hess[r as usize];
                hist[b].2 += 1;
            }
            let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
            for (b, &(gb, hb, cb)) in hist.iter().enumerate().take(nb.saturating_sub(1)) {
                gl += gb;
                hl += hb;
                nl += cb;
                let (gr, hr) = (g - gl, h - hl);
                if nl == 0
                    || nl == rows.len()
                    || hl < self.params.min_child_weight
                    || hr < self.params.min_child_weight
                {
                    continue;
                }
                let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
                if gain > 0.0 && best.as_ref().is_none_or(|bst| gain > bst.gain) {
                    best = Some(Best { gain, feature: f, bin: b });
                }
            }
        }
        let Some(best) = best else {
            return leaf;
        };
        let column = &self.bins[best.feature];
        let (left, right): (Vec<u32>, Vec<u32>) =
            rows.iter().partition(|&&r| column[r as usize] as usize <= best.bin);
        if left.is_empty() || right.is_empty() {
            return leaf;
        }
        Node::Split {
            feature: best.feature,
            threshold: self.values[best.feature][best.bin],
            left: Box::new(self.build(&left, depth + 1)),
            right: Box::new(self.build(&right, depth + 1)),
        }
    }
}

pub fn train_gbt(rows: &[FeatureRow], params: &GbtParams) -> Result<GbtModel> {
    params.validate()?;
    let n_features = dimension(rows)?;
    let mut sorted: Vec<&FeatureRow> = rows.iter().collect();
    sorted.sort();
    let labels: Vec<bool> = sorted.iter().map(|r| r.label).collect();
    let positives = labels.iter().filter(|&&y| y).count();
    let base_score = base_log_odds(positives, labels.len());
    let mut margins = vec![base_score; labels.len()];
    let mut model = GbtModel {
        version: MODEL_FORMAT_VERSION,
        params: *params,
        n_features,
        base_score,
        trees: Vec::new(),
        degenerate: positives == 0 || positives == labels.len(),
        train_loss: vec![log_loss(&margins, &labels)],
    };
    if model.degenerate {
        return Ok(model);
    }

    let mut values = Vec::with_capacity(n_features);
    let mut bins = Vec::with_capacity(n_features);
    for f in 0..n_features {
        let mut vs: Vec<u32> = sorted.iter().map(|r| r.x[f]).collect();
        vs.sort_unstable();
        vs.dedup();
        bins.push(
            sorted
                .iter()
                .map(|r| vs.binary_search(&r.x[f]).expect("value present") as u16)
                .collect::<Vec<u16>>(),
        );
        values.push(vs);
    }
    if values.iter().any(|v| v.len() > u16::MAX as usize) {
        return Err(Error::TooLarge(rows.len(), "distinct feature values per column"));
    }

    let all: Vec<u32> = (0..sorted.len() as u32).collect();
    let mut grad = vec![0.0; sorted.len()];
    let mut hess = vec![0.0; sorted.len()];
    for _ in 0..params.trees {
        for i in 0..sorted.len() {
            let p = sigmoid(margins[i]);
            grad[i] = p - if labels[i] { 1.0 } else { 0.0 };
            hess[i] = p * (1.0 - p);
        }
        let trainer = Trainer {
            bins: &bins,
            values: &values,
            grad: &grad,
            hess: &hess,
            params,
        };
        let tree = trainer.build(&all, 0);
        for (i, r) in sorted.iter().enumerate() {
            margins[i] += params.eta * tree.eval(&r.x);
        }
        model.train_loss.push(log_loss(&margins, &labels));
        model.trees.push(tree);
    }
    Ok(model)
}
