//! Second-order gradient boosted trees for binary classification.
//!
//! Trees are grown greedily to `max_depth` with an exact split search over
//! every distinct feature value. Leaf weights are Newton steps
//! `-G / (H + lambda)` scaled by the learning rate. The model output used
//! for attribution is the raw margin (log-odds), `base_score + sum(leaves)`.

mod metrics;
mod tree;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use metrics::{cross_validate, evaluate, f1_score, fit, CvReport, Metrics, DECISION_THRESHOLD};
pub use tree::{Tree, TreeNode};

use crate::config::GbdtParams;
use crate::error::{Error, Result};

/// Minimum loss reduction for a split to be kept.
const MIN_SPLIT_GAIN: f64 = 1e-12;

pub fn sigmoid(margin: f64) -> f64 {
    1.0 / (1.0 + (-margin).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub n_rounds: usize,
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub lambda: f64,
    pub pos_weight: f64,
    pub n_features: usize,
    #[serde(default)]
    pub feature_names: Vec<String>,
    pub trees: Vec<Tree>,
}

impl GbdtModel {
    /// Model with no trees; the margin is `base_score` everywhere.
    pub fn constant(base_score: f64, n_features: usize) -> Self {
        let p = GbdtParams::default();
        Self {
            base_score,
            learning_rate: p.learning_rate,
            n_rounds: 0,
            max_depth: p.max_depth,
            min_child_weight: p.min_child_weight,
            lambda: p.lambda,
            pos_weight: 1.0,
            n_features,
            feature_names: Vec::new(),
            trees: Vec::new(),
        }
    }

    pub fn raw_margin(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(self.margin_unchecked(x))
    }

    #[inline]
    pub fn margin_unchecked(&self, x: &[f64]) -> f64 {
        self.trees.iter().fold(self.base_score, |acc, t| acc + t.predict(x))
    }

    /// Margin with feature `j` read through `value(j)`.
    #[inline]
    pub fn margin_with(&self, value: impl Fn(usize) -> f64 + Copy) -> f64 {
        self.trees
            .iter()
            .fold(self.base_score, |acc, t| acc + t.eval_with(value))
    }

    pub fn probability(&self, x: &[f64]) -> Result<f64> {
        self.raw_margin(x).map(sigmoid)
    }

    /// PPS iff `sigmoid(margin) >= threshold`.
    pub fn predict(&self, x: &[f64], threshold: f64) -> Result<bool> {
        Ok(self.probability(x)? >= threshold)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: GbdtModel = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        for tree in &model.trees {
            for node in &tree.nodes {
                if let TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } = *node
                {
                    if feature >= model.n_features
                        || !threshold.is_finite()
                        || left >= tree.nodes.len()
                        || right >= tree.nodes.len()
                    {
                        return Err(Error::Schema("invalid split node".into()));
                    }
                }
            }
        }
        Ok(model)
    }

    /// The same model restricted to the given trees.
    pub fn with_trees(&self, trees: Vec<Tree>) -> Self {
        Self { trees, ..self.clone() }
    }
}

/// Weighted logistic loss, the objective being minimized.
pub fn weighted_log_loss(margins: &[f64], y: &[bool], pos_weight: f64) -> f64 {
    let mut total = 0.0;
    let mut weight = 0.0;
    for (&m, &label) in margins.iter().zip(y) {
        // log(1 + e^-m) for positives, log(1 + e^m) for negatives
        let (w, z) = if label { (pos_weight, -m) } else { (1.0, m) };
        let loss = if z > 0.0 {
            z + (-z).exp().ln_1p()
        } else {
            z.exp().ln_1p()
        };
        total += w * loss;
        weight += w;
    }
    total / weight
}

struct Grower<'a> {
    x: &'a [f64],
    n_features: usize,
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbdtParams,
    nodes: Vec<TreeNode>,
    /// Leaf value assigned to each row during growth.
    row_value: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Grower<'_> {
    #[inline]
    fn value(&self, row: u32, feature: usize) -> f64 {
        self.x[row as usize * self.n_features + feature]
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn find_split(&self, sorted: &[Vec<u32>], g_total: f64, h_total: f64) -> Option<BestSplit> {
        let mcw = self.params.min_child_weight;
        let parent = self.score(g_total, h_total);
        let mut best: Option<BestSplit> = None;
        for (feature, rows) in sorted.iter().enumerate() {
            let (mut gl, mut hl) = (0.0, 0.0);
            for pair in rows.windows(2) {
                let (cur, next) = (pair[0], pair[1]);
                gl += self.grad[cur as usize];
                hl += self.hess[cur as usize];
                let (a, b) = (self.value(cur, feature), self.value(next, feature));
                if !(b > a) {
                    continue;
                }
                let (gr, hr) = (g_total - gl, h_total - hl);
                if hl < mcw || hr < mcw {
                    continue;
                }
                let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent);
                if gain > MIN_SPLIT_GAIN && best.as_ref().is_none_or(|s| gain > s.gain) {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid > a { mid } else { b };
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }

    /// Grows the subtree for the rows in `sorted` (one ordering per feature)
    /// and returns its node index.
    fn grow(&mut self, sorted: Vec<Vec<u32>>, depth: usize) -> usize {
        let rows = &sorted[0];
        let cover = rows.len();
        let (g, h) = rows.iter().fold((0.0, 0.0), |(g, h), &r| {
            (g + self.grad[r as usize], h + self.hess[r as usize])
        });
        let split = if depth < self.params.max_depth && cover >= 2 {
            self.find_split(&sorted, g, h)
        } else {
            None
        };

        let idx = self.nodes.len();
        let Some(split) = split else {
            let value = -g / (h + self.params.lambda) * self.params.learning_rate;
            for &r in rows {
                self.row_value[r as usize] = value;
            }
            self.nodes.push(TreeNode::Leaf { value, cover });
            return idx;
        };

        self.nodes.push(TreeNode::Leaf { value: 0.0, cover });
        let goes_left = |r: u32| self.value(r, split.feature) < split.threshold;
        let mut left_sorted = Vec::with_capacity(sorted.len());
        let mut right_sorted = Vec::with_capacity(sorted.len());
        for list in &sorted {
            let (l, r): (Vec<u32>, Vec<u32>) = list.iter().partition(|&&row| goes_left(row));
            left_sorted.push(l);
            right_sorted.push(r);
        }
        drop(sorted);
        let left = self.grow(left_sorted, depth + 1);
        let right = self.grow(right_sorted, depth + 1);
        self.nodes[idx] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            cover,
        };
        idx
    }
}

fn check_inputs(x: &[f64], n_features: usize, y: &[bool]) -> Result<()> {
    if n_features == 0 || x.len() != y.len() * n_features {
        return Err(Error::DimensionMismatch {
            expected: y.len() * n_features,
            found: x.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::SingleClassDataset);
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample {
            channel: format!("feature {}", i % n_features),
            row: i / n_features,
        });
    }
    Ok(())
}

/// Per-feature row orderings by value. Ties are broken by a canonical row
/// rank (lexicographic over the whole row, then label), so the result does
/// not depend on the input row order.
fn presort(x: &[f64], n_features: usize, y: &[bool]) -> Vec<Vec<u32>> {
    let n = y.len();
    let row = |r: usize| &x[r * n_features..(r + 1) * n_features];
    let mut canonical: Vec<usize> = (0..n).collect();
    canonical.sort_by(|&a, &b| {
        row(a)
            .iter()
            .zip(row(b))
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
            .then(y[a].cmp(&y[b]))
    });
    let mut rank = vec![0u32; n];
    for (pos, &r) in canonical.iter().enumerate() {
        rank[r] = pos as u32;
    }
    (0..n_features)
        .map(|j| {
            let mut order: Vec<u32> = (0..n as u32).collect();
            order.sort_by(|&a, &b| {
                x[a as usize * n_features + j]
                    .total_cmp(&x[b as usize * n_features + j])
                    .then(rank[a as usize].cmp(&rank[b as usize]))
            });
            order
        })
        .collect()
}

/// Trains a model; also returns the weighted training log-loss after each
/// round (index 0 is the loss of the base score alone).
pub fn train_traced(x: &[f64], n_features: usize, y: &[bool], params: &GbdtParams) -> Result<(GbdtModel, Vec<f64>)> {
    params.validate()?;
    check_inputs(x, n_features, y)?;
    let n = y.len();
    let n_pos = y.iter().filter(|&&v| v).count();
    let n_neg = n - n_pos;
    let pos_weight = params.pos_weight.unwrap_or(n_neg as f64 / n_pos as f64);
    let weight = |label: bool| if label { pos_weight } else { 1.0 };

    let pos_mass = pos_weight * n_pos as f64;
    let prior = pos_mass / (pos_mass + n_neg as f64);
    let base_score = (prior / (1.0 - prior)).ln();

    let sorted = presort(x, n_features, y);
    let mut margins = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut losses = vec![weighted_log_loss(&margins, y, pos_weight)];

    for _ in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            let w = weight(y[i]);
            grad[i] = w * (p - if y[i] { 1.0 } else { 0.0 });
            hess[i] = w * p * (1.0 - p);
        }
        let mut grower = Grower {
            x,
            n_features,
            grad: &grad,
            hess: &hess,
            params,
            nodes: Vec::new(),
            row_value: vec![0.0; n],
        };
        grower.grow(sorted.clone(), 0);
        for (m, v) in margins.iter_mut().zip(&grower.row_value) {
            *m += v;
        }
        trees.push(Tree { nodes: grower.nodes });
        losses.push(weighted_log_loss(&margins, y, pos_weight));
    }

    let model = GbdtModel {
        base_score,
        learning_rate: params.learning_rate,
        n_rounds: params.n_rounds,
        max_depth: params.max_depth,
        min_child_weight: params.min_child_weight,
        lambda: params.lambda,
        pos_weight,
        n_features,
        feature_names: Vec::new(),
        trees,
    };
    Ok((model, losses))
}

pub fn train(x: &[f64], n_features: usize, y: &[bool], params: &GbdtParams) -> Result<GbdtModel> {
    train_traced(x, n_features, y, params).map(|(model, _)| model)
}
