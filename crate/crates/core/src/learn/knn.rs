use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{check_matrix, sq_dist, Dataset};
use crate::error::{Error, Result};

/// Majority vote among the `k` nearest training rows (Euclidean).
///
/// Distance ties go to the smaller training index, vote ties to the smaller label.
pub fn knn_fit_predict(train: &Dataset, k: usize, test_x: &[Vec<f64>]) -> Result<Vec<usize>> {
    if train.is_empty() {
        return Err(Error::Input("empty training set".into()));
    }
    if k == 0 || k > train.len() {
        return Err(Error::Parameter(format!("k = {k} outside 1..={}", train.len())));
    }
    let f = check_matrix(test_x)?;
    if !test_x.is_empty() && f != train.n_features() {
        return Err(Error::Input(format!("test rows have {f} features, training rows {}", train.n_features())));
    }
    Ok(test_x
        .par_iter()
        .map(|q| {
            let mut d: Vec<(f64, usize)> = train.x.iter().enumerate().map(|(i, r)| (sq_dist(q, r), i)).collect();
            d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
            for &(_, i) in &d[..k] {
                *votes.entry(train.y[i]).or_default() += 1;
            }
            let best = votes.values().copied().max().unwrap_or(0);
            votes.into_iter().find(|&(_, c)| c == best).map(|(l, _)| l).unwrap_or(0)
        })
        .collect())
}
