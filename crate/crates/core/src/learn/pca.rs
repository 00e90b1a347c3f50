use nalgebra::DMatrix;

use super::check_matrix;
use crate::error::{Error, Result};

/// Principal axes of centered training data.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `F x r`, orthonormal columns, largest-magnitude entry of each column positive.
    pub components: DMatrix<f64>,
    /// Descending, sample variance (divisor `S - 1`) along each component.
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }

    /// `mean + z * components^T` for projected rows `z`.
    pub fn inverse_transform(&self, z: &[Vec<f64>]) -> Vec<Vec<f64>> {
        z.iter()
            .map(|row| {
                (0..self.mean.len())
                    .map(|f| self.mean[f] + row.iter().enumerate().map(|(k, v)| v * self.components[(f, k)]).sum::<f64>())
                    .collect()
            })
            .collect()
    }
}

fn to_matrix(x: &[Vec<f64>], f: usize) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), f, |i, j| x[i][j])
}

/// Top-`r` principal components via a thin SVD of the centered data.
pub fn pca_fit(x: &[Vec<f64>], r: usize) -> Result<PcaModel> {
    let f = check_matrix(x)?;
    let s = x.len();
    if s < 2 {
        return Err(Error::Input("PCA needs at least two rows".into()));
    }
    if r == 0 || r > s.min(f) {
        return Err(Error::Parameter(format!("PCA rank {r} outside 1..={}", s.min(f))));
    }
    let mut m = to_matrix(x, f);
    let mean: Vec<f64> = (0..f).map(|j| m.column(j).mean()).collect();
    for j in 0..f {
        m.column_mut(j).add_scalar_mut(-mean[j]);
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD did not return right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let mut components = DMatrix::zeros(f, r);
    let mut explained_variance = Vec::with_capacity(r);
    for (k, &src) in order.iter().take(r).enumerate() {
        let mut col = v_t.row(src).transpose();
        let pivot = col.iamax();
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        components.set_column(k, &col);
        let sv = svd.singular_values[src];
        explained_variance.push(sv * sv / (s - 1) as f64);
    }
    Ok(PcaModel { mean, components, explained_variance })
}

/// Centers with the training mean and projects onto the components.
pub fn pca_transform(model: &PcaModel, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let f = check_matrix(x)?;
    if !x.is_empty() && f != model.mean.len() {
        return Err(Error::Input(format!("{f} features, PCA fitted on {}", model.mean.len())));
    }
    Ok(x.iter()
        .map(|row| {
            (0..model.n_components())
                .map(|k| {
                    row.iter()
                        .zip(&model.mean)
                        .enumerate()
                        .map(|(j, (v, m))| (v - m) * model.components[(j, k)])
                        .sum()
                })
                .collect()
        })
        .collect())
}
