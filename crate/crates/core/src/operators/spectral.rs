use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::eigen::{smallest_eigenpairs, EigenMethod, Eigenpairs};
use super::laplacian::LaplacianMatrix;
use crate::error::{Error, Result};

/// Heat semigroup truncated to the `kappa` lowest Laplacian modes,
/// `H^t = sum_k exp(-tau * lambda_k * t) u_k u_k^T`.
#[derive(Clone, Debug)]
pub struct SpectralHeatOperator {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    time_scale: f64,
}

/// On-disk eigenpair layout: one inner array per eigenvector.
#[derive(Debug, Serialize, Deserialize)]
pub struct EigenpairFile {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

impl SpectralHeatOperator {
    /// Wraps precomputed eigenpairs. Columns must be orthonormal.
    pub fn new(eigenvalues: Vec<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let kappa = eigenvalues.len();
        if kappa == 0 || eigenvectors.ncols() != kappa || eigenvectors.nrows() < kappa {
            return Err(Error::Input(format!(
                "{} eigenvalues do not match an eigenvector block of {}x{}",
                kappa,
                eigenvectors.nrows(),
                eigenvectors.ncols()
            )));
        }
        if eigenvalues.iter().chain(eigenvectors.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite eigenpair entry".into()));
        }
        if eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Input("eigenvalues must be ascending".into()));
        }
        let gram = eigenvectors.transpose() * &eigenvectors;
        let dev = (gram - DMatrix::identity(kappa, kappa)).amax();
        if dev > 1e-8 {
            return Err(Error::Input(format!("eigenvectors deviate from orthonormal by {dev:.3e}")));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            time_scale: 1.0,
        })
    }

    /// Rescales diffusion time: the spectral function becomes `exp(-tau * lambda)`.
    pub fn with_time_scale(mut self, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Parameter(format!("time scale tau = {tau} must be positive")));
        }
        self.time_scale = tau;
        Ok(self)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    pub fn kappa(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn len(&self) -> usize {
        self.eigenvectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvectors.nrows() == 0
    }

    /// Spectral function value `g(lambda_k) = exp(-tau * lambda_k)`.
    pub fn multiplier(&self, k: usize) -> f64 {
        (-self.time_scale * self.eigenvalues[k]).exp()
    }

    pub(crate) fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::Input(format!("signal has length {}, operator has {} points", f.len(), self.len())));
        }
        Ok(())
    }

    /// Coefficients `<u_k, f>`.
    pub fn coefficients(&self, f: &[f64]) -> Result<DVector<f64>> {
        self.check_len(f)?;
        Ok(self.eigenvectors.tr_mul(&DVector::from_column_slice(f)))
    }

    /// `sum_k h_k c_k u_k` for coefficient vector `c`.
    pub fn synthesize(&self, coeffs: &DVector<f64>, mut h: impl FnMut(usize) -> f64) -> Vec<f64> {
        let scaled = DVector::from_fn(coeffs.len(), |k, _| h(k) * coeffs[k]);
        (&self.eigenvectors * scaled).data.into()
    }

    /// `H^t f`.
    pub fn heat_apply(&self, t: f64, f: &[f64]) -> Result<Vec<f64>> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Parameter(format!("diffusion time t = {t} must be nonnegative")));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite signal value".into()));
        }
        let c = self.coefficients(f)?;
        Ok(self.synthesize(&c, |k| (-self.time_scale * self.eigenvalues[k] * t).exp()))
    }

    pub fn to_file(&self) -> EigenpairFile {
        EigenpairFile {
            eigenvalues: self.eigenvalues.clone(),
            eigenvectors: self.eigenvectors.column_iter().map(|c| c.iter().copied().collect()).collect(),
        }
    }

    pub fn from_file(file: EigenpairFile) -> Result<Self> {
        let n = file.eigenvectors.first().map(Vec::len).unwrap_or(0);
        if file.eigenvectors.iter().any(|v| v.len() != n) {
            return Err(Error::Input("eigenvectors have unequal lengths".into()));
        }
        let cols: Vec<f64> = file.eigenvectors.concat();
        let m = DMatrix::from_column_slice(n, file.eigenvectors.len(), &cols);
        Self::new(file.eigenvalues, m)
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let file: EigenpairFile = serde_json::from_str(&text).map_err(|e| {
            Error::parse(path.display().to_string(), format!("line {}, column {}", e.line(), e.column()), e.to_string())
        })?;
        Self::from_file(file)
    }
}

/// Truncated spectral heat operator from the `kappa` smallest eigenpairs of `l`.
pub fn smallest_eigs(l: &LaplacianMatrix, kappa: usize) -> Result<SpectralHeatOperator> {
    smallest_eigs_with(l, kappa, EigenMethod::Auto)
}

pub fn smallest_eigs_with(l: &LaplacianMatrix, kappa: usize, method: EigenMethod) -> Result<SpectralHeatOperator> {
    let Eigenpairs { values, vectors } = smallest_eigenpairs(l.matrix(), kappa, method)?;
    SpectralHeatOperator::new(values, vectors)
}
