use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_matrix, Dataset};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf { label: usize },
    Split { feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
}

/// CART classifier; rows with `x[feature] <= threshold` go left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: TreeNode,
    pub n_features: usize,
}

impl TreeModel {
    pub fn depth(&self) -> usize {
        fn walk(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(left).max(walk(right)),
            }
        }
        walk(&self.root)
    }
}

/// Gini impurity `1 - sum p_c^2` of a label multiset.
pub fn gini(labels: impl IntoIterator<Item = usize>) -> f64 {
    let counts = class_counts(labels);
    let n: usize = counts.values().sum();
    if n == 0 {
        return 0.0;
    }
    1.0 - counts.values().map(|&c| (c as f64 / n as f64).powi(2)).sum::<f64>()
}

fn class_counts(labels: impl IntoIterator<Item = usize>) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    counts
}

fn majority(labels: impl IntoIterator<Item = usize>) -> usize {
    let counts = class_counts(labels);
    let best = counts.values().copied().max().unwrap_or(0);
    counts.into_iter().find(|&(_, c)| c == best).map_or(0, |(l, _)| l)
}

struct Best {
    score: f64,
    feature: usize,
    threshold: f64,
}

fn best_split(data: &Dataset, idx: &[usize], min_leaf: usize) -> Option<Best> {
    let n = idx.len() as f64;
    let mut best: Option<Best> = None;
    for feature in 0..data.n_features() {
        let mut order = idx.to_vec();
        order.sort_by(|&a, &b| data.x[a][feature].total_cmp(&data.x[b][feature]).then(a.cmp(&b)));
        let mut left: BTreeMap<usize, usize> = BTreeMap::new();
        let mut right = class_counts(order.iter().map(|&i| data.y[i]));
        for pos in 1..order.len() {
            let moved = data.y[order[pos - 1]];
            *left.entry(moved).or_default() += 1;
            if let Some(c) = right.get_mut(&moved) {
                *c -= 1;
            }
            let (lo, hi) = (data.x[order[pos - 1]][feature], data.x[order[pos]][feature]);
            if lo == hi || pos < min_leaf || order.len() - pos < min_leaf {
                continue;
            }
            let impurity = |counts: &BTreeMap<usize, usize>, m: f64| {
                1.0 - counts.values().map(|&c| (c as f64 / m).powi(2)).sum::<f64>()
            };
            let (nl, nr) = (pos as f64, n - pos as f64);
            let score = nl / n * impurity(&left, nl) + nr / n * impurity(&right, nr);
            if best.as_ref().is_none_or(|b| score < b.score) {
                best = Some(Best { score, feature, threshold: lo + (hi - lo) / 2.0 });
            }
        }
    }
    best
}

fn grow(data: &Dataset, idx: &[usize], depth: usize, max_depth: usize, min_leaf: usize) -> TreeNode {
    let labels = || idx.iter().map(|&i| data.y[i]);
    let pure = labels().all(|l| l == data.y[idx[0]]);
    if pure || depth >= max_depth {
        return TreeNode::Leaf { label: majority(labels()) };
    }
    match best_split(data, idx, min_leaf) {
        None => TreeNode::Leaf { label: majority(labels()) },
        Some(b) => {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| data.x[i][b.feature] <= b.threshold);
            TreeNode::Split {
                feature: b.feature,
                threshold: b.threshold,
                left: Box::new(grow(data, &l, depth + 1, max_depth, min_leaf)),
                right: Box::new(grow(data, &r, depth + 1, max_depth, min_leaf)),
            }
        }
    }
}

/// Fits a CART tree minimizing weighted Gini impurity.
///
/// Candidate thresholds are midpoints between consecutive distinct values;
/// ties in impurity keep the lowest feature index, then the lowest threshold.
pub fn tree_fit(train: &Dataset, max_depth: usize, min_leaf: usize) -> Result<TreeModel> {
    if max_depth == 0 || min_leaf == 0 {
        return Err(Error::Parameter("max_depth and min_leaf must be at least 1".into()));
    }
    if train.is_empty() {
        return Err(Error::Input("empty training set".into()));
    }
    let idx: Vec<usize> = (0..train.len()).collect();
    Ok(TreeModel {
        root: grow(train, &idx, 0, max_depth, min_leaf),
        n_features: train.n_features(),
    })
}

pub fn tree_predict(model: &TreeModel, x: &[Vec<f64>]) -> Result<Vec<usize>> {
    let f = check_matrix(x)?;
    if !x.is_empty() && f != model.n_features {
        return Err(Error::Input(format!("{f} features, tree fitted on {}", model.n_features)));
    }
    Ok(x.iter()
        .map(|row| {
            let mut node = &model.root;
            loop {
                match node {
                    TreeNode::Leaf { label } => return *label,
                    TreeNode::Split { feature, threshold, left, right } => {
                        node = if row[*feature] <= *threshold { left } else { right };
                    }
                }
            }
        })
        .collect())
}
