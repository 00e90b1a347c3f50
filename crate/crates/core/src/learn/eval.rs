use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{knn_fit_predict, pca_fit, pca_transform, tree_fit, tree_predict, Dataset, Standardizer};
use crate::error::{Error, Result};

/// Classifier plus preprocessing applied inside every split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub classifier: Classifier,
    pub standardize: bool,
    /// Number of principal components kept; `None` skips PCA.
    pub pca: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Classifier {
    Knn { k: usize },
    Tree { max_depth: usize, min_leaf: usize },
}

impl ModelSpec {
    pub fn knn(k: usize) -> Self {
        Self { classifier: Classifier::Knn { k }, standardize: true, pca: None }
    }

    pub fn tree(max_depth: usize, min_leaf: usize) -> Self {
        Self { classifier: Classifier::Tree { max_depth, min_leaf }, standardize: true, pca: None }
    }

    pub fn with_pca(mut self, r: Option<usize>) -> Self {
        self.pca = r;
        self
    }

    pub fn with_standardize(mut self, on: bool) -> Self {
        self.standardize = on;
        self
    }

    /// Fits on `train` and predicts `test_x`.
    pub fn fit_predict(&self, train: &Dataset, test_x: &[Vec<f64>]) -> Result<Vec<usize>> {
        let (mut tx, mut qx) = (train.x.clone(), test_x.to_vec());
        if self.standardize {
            let s = Standardizer::fit(&tx)?;
            tx = s.transform(&tx)?;
            qx = s.transform(&qx)?;
        }
        if let Some(r) = self.pca {
            let m = pca_fit(&tx, r)?;
            tx = pca_transform(&m, &tx)?;
            qx = pca_transform(&m, &qx)?;
        }
        let train = Dataset { x: tx, y: train.y.clone() };
        match self.classifier {
            Classifier::Knn { k } => knn_fit_predict(&train, k, &qx),
            Classifier::Tree { max_depth, min_leaf } => tree_predict(&tree_fit(&train, max_depth, min_leaf)?, &qx),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitSpec {
    Holdout { test_fraction: f64 },
    KFold { folds: usize },
    LeaveOneOut,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub n_train: usize,
    pub n_test: usize,
    pub correct: usize,
}

/// Accuracy report. For k-fold and leave-one-out, counts are summed over folds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub model: ModelSpec,
    pub seed: u64,
    pub split: SplitSpec,
    pub per_class: BTreeMap<String, ClassCounts>,
    pub predictions: Vec<(usize, usize)>,
}

fn by_class(labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut m: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        m.entry(l).or_default().push(i);
    }
    m
}

/// Per-class shuffled holdout: `round(test_fraction * n_c)` rows of each class
/// are held out, keeping at least one training row per class.
pub fn stratified_split(labels: &[usize], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Parameter(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (_, mut idx) in by_class(labels) {
        idx.shuffle(&mut rng);
        let n_test = ((test_fraction * idx.len() as f64).round() as usize).min(idx.len() - 1);
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    if test.is_empty() {
        return Err(Error::Parameter(format!("test fraction {test_fraction} leaves no test rows")));
    }
    Ok((train, test))
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin.
pub fn kfold_split(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Parameter(format!("need at least 2 folds, got {folds}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds];
    for (class, mut idx) in by_class(labels) {
        if idx.len() < folds {
            return Err(Error::Input(format!("class {class} has {} members, fewer than {folds} folds", idx.len())));
        }
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            out[pos % folds].push(i);
        }
    }
    out.iter_mut().for_each(|f| f.sort_unstable());
    Ok(out)
}

/// Trains and scores `model` under the requested split.
pub fn evaluate(data: &Dataset, model: &ModelSpec, split: SplitSpec, seed: u64) -> Result<EvalReport> {
    let classes = by_class(&data.y);
    if classes.len() < 2 {
        return Err(Error::Input("evaluation needs at least two classes".into()));
    }
    let folds: Vec<Vec<usize>> = match split {
        SplitSpec::Holdout { test_fraction } => vec![stratified_split(&data.y, test_fraction, seed)?.1],
        SplitSpec::KFold { folds } => kfold_split(&data.y, folds, seed)?,
        SplitSpec::LeaveOneOut => (0..data.len()).map(|i| vec![i]).collect(),
    };
    let mut per_class: BTreeMap<String, ClassCounts> = classes
        .keys()
        .map(|c| (c.to_string(), ClassCounts { n_train: 0, n_test: 0, correct: 0 }))
        .collect();
    let (mut n_train, mut n_test, mut correct) = (0, 0, 0);
    let mut predictions = Vec::new();
    for test in &folds {
        let mut in_test = vec![false; data.len()];
        test.iter().for_each(|&i| in_test[i] = true);
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| !in_test[i]).collect();
        let train = data.subset(&train_idx);
        let pred = model.fit_predict(&train, &data.subset(test).x)?;
        for &i in &train_idx {
            per_class.get_mut(&data.y[i].to_string()).expect("known class").n_train += 1;
        }
        for (&i, &p) in test.iter().zip(&pred) {
            let c = per_class.get_mut(&data.y[i].to_string()).expect("known class");
            c.n_test += 1;
            if p == data.y[i] {
                c.correct += 1;
                correct += 1;
            }
            predictions.push((i, p));
        }
        n_train += train_idx.len();
        n_test += test.len();
    }
    predictions.sort_unstable();
    Ok(EvalReport {
        accuracy: correct as f64 / n_test as f64,
        n_train,
        n_test,
        model: model.clone(),
        seed,
        split,
        per_class,
        predictions,
    })
}
