//! Discrete heat semigroups on point clouds.
//!
//! Two interchangeable backends approximate `H^t`:
//!
//! * [`SpectralHeatOperator`]: the `kappa` lowest eigenpairs of the
//!   data-driven Laplacian `(D - W) / (eps N)`, filtered by `exp(-tau lambda t)`.
//! * [`MarkovOperator`]: the row-stochastic matrix `D^-1 W` as `H^1`, with
//!   dyadic powers obtained by repeated squaring or repeated application.
//!
//! Both implement [`HeatSemigroup`], which is all the wavelet layer needs.

mod eigen;
mod laplacian;
mod markov;
mod spectral;

use serde::{Deserialize, Serialize};

pub use eigen::{smallest_eigenpairs, EigenMethod, Eigenpairs, RESIDUAL_TOL};
pub use laplacian::{build_laplacian, LaplacianMatrix};
pub use markov::{markov_operator, CsrMatrix, MarkovOperator, Transition, DYADIC_CACHE_MAX_N};
pub use spectral::{smallest_eigs, smallest_eigs_with, EigenpairFile, SpectralHeatOperator};

use crate::error::{Error, Result};

/// Default constant in [`epsilon_rule`].
pub const DEFAULT_EPS_CONSTANT: f64 = 2.0;

/// Bandwidth `c * N^(-1 / (d/2 + 3))`.
pub fn epsilon_rule(n_points: usize, intrinsic_dim: usize, c: f64) -> Result<f64> {
    if n_points == 0 || intrinsic_dim == 0 {
        return Err(Error::Parameter("point count and intrinsic dimension must be positive".into()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Parameter(format!("epsilon constant {c} must be positive")));
    }
    let exponent = -1.0 / (intrinsic_dim as f64 / 2.0 + 3.0);
    Ok(c * (n_points as f64).powf(exponent))
}

/// Anything that can produce the dyadic diffusions `H^(2^j) f`.
pub trait HeatSemigroup: Sync {
    /// Number of points the operator acts on.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `[H^1 f, H^2 f, H^4 f, ..., H^(2^j_max) f]`.
    fn dyadic_cascade(&self, f: &[f64], j_max: usize) -> Result<Vec<Vec<f64>>>;
}

impl HeatSemigroup for SpectralHeatOperator {
    fn len(&self) -> usize {
        SpectralHeatOperator::len(self)
    }

    fn dyadic_cascade(&self, f: &[f64], j_max: usize) -> Result<Vec<Vec<f64>>> {
        let c = self.coefficients(f)?;
        let tau = self.time_scale();
        let lambda = self.eigenvalues();
        Ok((0..=j_max)
            .map(|j| {
                let t = (1u64 << j) as f64;
                self.synthesize(&c, |k| (-tau * lambda[k] * t).exp())
            })
            .collect())
    }
}

impl HeatSemigroup for MarkovOperator {
    fn len(&self) -> usize {
        MarkovOperator::len(self)
    }

    fn dyadic_cascade(&self, f: &[f64], j_max: usize) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(j_max + 1);
        out.push(self.apply(f)?);
        for j in 1..=j_max {
            // P^(2^j) f = P^(2^(j-1)) (P^(2^(j-1)) f)
            let next = self.dyadic_apply(j - 1, &out[j - 1])?;
            out.push(next);
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Spectral,
    Markov,
}

/// A constructed heat-semigroup backend.
#[derive(Clone, Debug)]
pub enum Backend {
    Spectral(SpectralHeatOperator),
    Markov(MarkovOperator),
}

impl Backend {
    pub fn kind(&self) -> BackendKind {
        match self {
            Backend::Spectral(_) => BackendKind::Spectral,
            Backend::Markov(_) => BackendKind::Markov,
        }
    }

    pub fn as_spectral(&self) -> Option<&SpectralHeatOperator> {
        match self {
            Backend::Spectral(op) => Some(op),
            Backend::Markov(_) => None,
        }
    }
}

impl HeatSemigroup for Backend {
    fn len(&self) -> usize {
        match self {
            Backend::Spectral(op) => op.len(),
            Backend::Markov(op) => op.len(),
        }
    }

    fn dyadic_cascade(&self, f: &[f64], j_max: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            Backend::Spectral(op) => op.dyadic_cascade(f, j_max),
            Backend::Markov(op) => op.dyadic_cascade(f, j_max),
        }
    }
}
