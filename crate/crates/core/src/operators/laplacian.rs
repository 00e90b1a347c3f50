use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::AffinityGraph;

/// Data-driven Laplacian `L = (D - W) / (eps * N)`.
#[derive(Clone, Debug)]
pub struct LaplacianMatrix {
    matrix: DMatrix<f64>,
    eps: f64,
}

impl LaplacianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// Builds `(D - W) / (eps * N)`.
///
/// The diagonal is assembled from the off-diagonal row sum rather than
/// `D_ii - W_ii`, so constant vectors are annihilated up to a single rounding
/// per row. `eps` should be the bandwidth the graph was built with.
pub fn build_laplacian(g: &AffinityGraph, eps: f64) -> Result<LaplacianMatrix> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("eps = {eps} must be positive and finite")));
    }
    let w = g.weights();
    let n = w.nrows();
    if n != w.ncols() || n != g.degrees().len() {
        return Err(Error::Input(format!(
            "affinity {}x{} does not match {} degrees",
            w.nrows(),
            w.ncols(),
            g.degrees().len()
        )));
    }
    let scale = 1.0 / (eps * n as f64);
    let mut matrix = w.map(|v| -v * scale);
    for i in 0..n {
        let off: f64 = w.column(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).sum();
        matrix[(i, i)] = off * scale;
    }
    Ok(LaplacianMatrix { matrix, eps })
}
