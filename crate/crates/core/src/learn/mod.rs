//! Small learning harness for scattering features: standardization, PCA,
//! k-NN, CART decision trees, k-means and seeded evaluation.

mod eval;
mod kmeans;
mod knn;
mod pca;
mod tree;

pub use eval::{evaluate, kfold_split, stratified_split, ClassCounts, Classifier, EvalReport, ModelSpec, SplitSpec};
pub use kmeans::{cluster_proportions, kmeans, purity, KMeansResult};
pub use knn::knn_fit_predict;
pub use pca::{pca_fit, pca_transform, PcaModel};
pub use tree::{gini, tree_fit, tree_predict, TreeModel, TreeNode};

use crate::error::{Error, Result};

/// Feature rows with one integer label each.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<usize>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Input(format!("{} feature rows but {} labels", x.len(), y.len())));
        }
        check_matrix(&x)?;
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

pub(crate) fn check_matrix(x: &[Vec<f64>]) -> Result<usize> {
    let f = x.first().map_or(0, Vec::len);
    for (i, row) in x.iter().enumerate() {
        if row.len() != f {
            return Err(Error::Input(format!("row {i} has {} features, expected {f}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!("row {i} has a non-finite feature")));
        }
    }
    Ok(f)
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Per-column z-score fitted on training rows. Constant columns are only centered.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let f = check_matrix(x)?;
        if x.is_empty() {
            return Err(Error::Input("cannot standardize zero rows".into()));
        }
        let n = x.len() as f64;
        let mut mean = vec![0.0; f];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; f];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var.iter().map(|v| if v.sqrt() > 1e-300 { v.sqrt() } else { 1.0 }).collect();
        Ok(Self { mean, scale })
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let f = check_matrix(x)?;
        if !x.is_empty() && f != self.mean.len() {
            return Err(Error::Input(format!("{f} features, standardizer fitted on {}", self.mean.len())));
        }
        Ok(x.iter()
            .map(|row| row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect())
            .collect())
    }
}
