//! Dyadic diffusion wavelets and q-th order scattering moments.
//!
//! A signal `f` on the point cloud is pushed through the filter bank
//! `W_0 = I - H^1`, `W_j = H^(2^(j-1)) - H^(2^j)` (`1 <= j <= J`),
//! `A_J = H^(2^J)`, with pointwise absolute values between layers. Each
//! path of strictly increasing scales contributes the moments
//! `(1/N) sum_i |.|^q` for `q = 1..=Q`.
//!
//! Features are laid out canonically: by path order (0th, 1st, 2nd, 3rd),
//! lexicographically by scale tuple within an order, and by ascending `q`
//! within a path.

mod export;
mod features;
mod wavelets;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use export::{FeatureTable, FeatureTableFormat};
pub use features::{
    dirac_signals, extract_many, lq_moment, manifold_embedding, scattering_features, EmbeddingMode, FeatureVector,
};
pub use wavelets::{sqrt_wavelet_apply, wavelet_apply};

use crate::error::{Error, Result};
use crate::operators::BackendKind;

/// Largest supported scale; `2^J` must stay exactly representable as a diffusion time.
pub const MAX_SCALE: usize = 40;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletVariant {
    /// Differences of semigroup operators.
    #[default]
    Plain,
    /// Square-root filters; an exact isometry but requires eigenpairs.
    Sqrt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringConfig {
    /// Largest wavelet scale `J`.
    pub max_scale: usize,
    /// Largest moment exponent `Q`.
    pub max_moment: u32,
    /// Deepest path order, 1 to 3. Lower orders are always included.
    pub max_order: usize,
    pub backend: BackendKind,
    pub wavelets: WaveletVariant,
}

impl Default for ScatteringConfig {
    fn default() -> Self {
        Self {
            max_scale: 8,
            max_moment: 4,
            max_order: 2,
            backend: BackendKind::Spectral,
            wavelets: WaveletVariant::Plain,
        }
    }
}

impl ScatteringConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_scale > MAX_SCALE {
            return Err(Error::Parameter(format!("J = {} exceeds {MAX_SCALE}", self.max_scale)));
        }
        if self.max_moment == 0 {
            return Err(Error::Parameter("Q must be at least 1".into()));
        }
        if !(1..=3).contains(&self.max_order) {
            return Err(Error::Parameter(format!("path order {} must be 1, 2 or 3", self.max_order)));
        }
        if self.wavelets == WaveletVariant::Sqrt && self.backend != BackendKind::Spectral {
            return Err(Error::Config("square-root wavelets require the spectral backend".into()));
        }
        Ok(())
    }

    /// Number of scattering paths, zeroth order included.
    pub fn path_count(&self) -> usize {
        let scales = self.max_scale + 1;
        (0..=self.max_order).map(|o| binomial(scales, o)).sum()
    }

    pub fn feature_count(&self) -> usize {
        self.max_moment as usize * self.path_count()
    }

    /// Scale tuples in canonical order.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for order in 1..=self.max_order {
            push_combinations(self.max_scale + 1, order, &mut Vec::new(), 0, &mut out);
        }
        out
    }

    /// One label per feature, in canonical order.
    pub fn labels(&self) -> Vec<PathLabel> {
        self.paths()
            .into_iter()
            .flat_map(|scales| (1..=self.max_moment).map(move |q| PathLabel { scales: scales.clone(), q }))
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn push_combinations(n: usize, k: usize, prefix: &mut Vec<usize>, start: usize, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == k {
        out.push(prefix.clone());
        return;
    }
    for s in start..n {
        prefix.push(s);
        push_combinations(n, k, prefix, s + 1, out);
        prefix.pop();
    }
}

/// A scattering path (ascending scales) together with its moment exponent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathLabel {
    pub scales: Vec<usize>,
    pub q: u32,
}

impl fmt::Display for PathLabel {
    /// `S(1,3)q2`; the zeroth-order path prints as `S()q1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner: Vec<String> = self.scales.iter().map(|s| s.to_string()).collect();
        write!(f, "S({})q{}", inner.join(","), self.q)
    }
}

impl std::str::FromStr for PathLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("malformed feature label {s:?}"));
        let rest = s.strip_prefix("S(").ok_or_else(bad)?;
        let (inner, q) = rest.split_once(")q").ok_or_else(bad)?;
        let scales = if inner.is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
        };
        let q = q.parse().map_err(|_| bad())?;
        Ok(PathLabel { scales, q })
    }
}
