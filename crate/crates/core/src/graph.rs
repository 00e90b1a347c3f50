//! Affinity graphs built from raw point clouds.
//!
//! Two kernels are supported: the fixed-bandwidth Gaussian
//! `K(x, x') = eps^(-d/2) exp(-|x - x'|^2 / eps)` and the self-tuning kernel
//! that averages two Gaussians whose bandwidths are the k-th neighbour
//! distances of each endpoint. Self-affinities stay on the diagonal, which
//! keeps every degree strictly positive.
//!
//! Distances are brute force, O(N^2) in time and memory.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N` points in `R^n`, assumed to sample a `d`-dimensional manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    n_points: usize,
    ambient_dim: usize,
    intrinsic_dim: usize,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates.
    pub fn new(coords: Vec<f64>, ambient_dim: usize, intrinsic_dim: usize) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(Error::Input("ambient dimension must be at least 1".into()));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(ambient_dim) {
            return Err(Error::Input(format!(
                "{} coordinates do not form whole points of dimension {ambient_dim}",
                coords.len()
            )));
        }
        if intrinsic_dim == 0 || intrinsic_dim > ambient_dim {
            return Err(Error::Parameter(format!(
                "intrinsic dimension {intrinsic_dim} must lie in 1..={ambient_dim}"
            )));
        }
        if let Some(pos) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite coordinate at point {}, axis {}",
                pos / ambient_dim,
                pos % ambient_dim
            )));
        }
        let n_points = coords.len() / ambient_dim;
        Ok(Self {
            coords,
            n_points,
            ambient_dim,
            intrinsic_dim,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], intrinsic_dim: usize) -> Result<Self> {
        let ambient = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().position(|r| r.len() != ambient) {
            return Err(Error::Input(format!(
                "row {bad} has {} coordinates, expected {ambient}",
                rows[bad].len()
            )));
        }
        Self::new(rows.concat(), ambient, intrinsic_dim)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.ambient_dim)
    }

    /// Row-major coordinate buffer.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Reorders points so that new point `i` is old point `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n_points)?;
        let coords = perm.iter().flat_map(|&p| self.point(p).iter().copied()).collect();
        Self::new(coords, self.ambient_dim, self.intrinsic_dim)
    }

    /// Applies `f` to every point, keeping the intrinsic dimension.
    pub fn map_points(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let rows: Vec<Vec<f64>> = self.points().map(&mut f).collect();
        Self::from_rows(&rows, self.intrinsic_dim)
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::Input(format!("permutation has length {}, expected {n}", perm.len())));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::Input("not a permutation".into()));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelKind {
    Gaussian { eps: f64 },
    Adaptive { k: usize },
    /// Weights supplied directly rather than built from a kernel.
    Custom,
}

/// Symmetric nonnegative affinity matrix together with its degree vector.
#[derive(Clone, Debug)]
pub struct AffinityGraph {
    weights: DMatrix<f64>,
    degrees: Vec<f64>,
    kernel: KernelKind,
}

impl AffinityGraph {
    /// Wraps a user-supplied weight matrix after checking symmetry and sign.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || weights.ncols() != n {
            return Err(Error::Input(format!(
                "affinity matrix must be square and non-empty, got {}x{}",
                n,
                weights.ncols()
            )));
        }
        for j in 0..n {
            for i in 0..n {
                if weights[(i, j)] != weights[(j, i)] {
                    return Err(Error::Input(format!("affinity matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        let degrees = degree_vector(&weights)?;
        Ok(Self {
            weights,
            degrees,
            kernel: KernelKind::Custom,
        })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }
}

/// `M[i][j] = |x_i - x_j|^2`, symmetric with an exact zero diagonal.
pub fn pairwise_sq_dist(pc: &PointCloud) -> DMatrix<f64> {
    let n = pc.len();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let xi = pc.point(i);
        for j in (i + 1)..n {
            let d: f64 = xi.iter().zip(pc.point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    out
}

/// Distance from each point to its k-th nearest *other* point.
///
/// Ties among equidistant neighbours are broken by the smaller index, which
/// only matters for which neighbour is reported, never the distance.
pub fn knn_scale(pc: &PointCloud, k: usize) -> Result<Vec<f64>> {
    knn_scale_from_sq(&pairwise_sq_dist(pc), k)
}

pub(crate) fn knn_scale_from_sq(sq: &DMatrix<f64>, k: usize) -> Result<Vec<f64>> {
    let n = sq.nrows();
    if k == 0 || k >= n {
        return Err(Error::Parameter(format!("k = {k} must lie in 1..={}", n.saturating_sub(1))));
    }
    let mut row: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    let mut sigma = Vec::with_capacity(n);
    for i in 0..n {
        row.clear();
        // sq is symmetric, so column i is row i and contiguous
        row.extend(sq.column(i).iter().copied().enumerate().filter(|&(j, _)| j != i).map(|(j, d)| (d, j)));
        let (_, kth, _) = row.select_nth_unstable_by(k - 1, |a, b| {
            a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
        });
        let s = kth.0.sqrt();
        if s <= 0.0 {
            return Err(Error::DegenerateScale { index: i });
        }
        sigma.push(s);
    }
    Ok(sigma)
}

/// Fixed-bandwidth Gaussian affinities, `W[i][i] = eps^(-d/2)`.
pub fn gaussian_affinity(pc: &PointCloud, eps: f64) -> Result<AffinityGraph> {
    gaussian_affinity_from_sq(&pairwise_sq_dist(pc), eps, pc.intrinsic_dim())
}

pub(crate) fn gaussian_affinity_from_sq(sq: &DMatrix<f64>, eps: f64, intrinsic_dim: usize) -> Result<AffinityGraph> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("bandwidth eps = {eps} must be positive and finite")));
    }
    let scale = eps.powf(-(intrinsic_dim as f64) / 2.0);
    let weights = sq.map(|d| scale * (-d / eps).exp());
    let degrees = degree_vector(&weights)?;
    Ok(AffinityGraph {
        weights,
        degrees,
        kernel: KernelKind::Gaussian { eps },
    })
}

/// Self-tuning affinities
/// `W[i][j] = (exp(-|x_i - x_j|^2 / s_i^2) + exp(-|x_i - x_j|^2 / s_j^2)) / 2`
/// with `s_i` the k-th neighbour distance of point `i`.
pub fn adaptive_affinity(pc: &PointCloud, k: usize) -> Result<AffinityGraph> {
    adaptive_affinity_from_sq(&pairwise_sq_dist(pc), k)
}

pub(crate) fn adaptive_affinity_from_sq(sq: &DMatrix<f64>, k: usize) -> Result<AffinityGraph> {
    let sigma = knn_scale_from_sq(sq, k)?;
    let n = sq.nrows();
    let inv_sq: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let mut weights = DMatrix::zeros(n, n);
    for i in 0..n {
        weights[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let d = sq[(i, j)];
            let w = 0.5 * ((-d * inv_sq[i]).exp() + (-d * inv_sq[j]).exp());
            weights[(i, j)] = w;
            weights[(j, i)] = w;
        }
    }
    let degrees = degree_vector(&weights)?;
    Ok(AffinityGraph {
        weights,
        degrees,
        kernel: KernelKind::Adaptive { k },
    })
}

/// Row sums of a nonnegative matrix.
pub fn degree_vector(weights: &DMatrix<f64>) -> Result<Vec<f64>> {
    let mut deg = Vec::with_capacity(weights.nrows());
    for (i, row) in weights.row_iter().enumerate() {
        if let Some(v) = row.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Input(format!("negative or NaN affinity {v} in row {i}")));
        }
        let s: f64 = row.iter().sum();
        if !(s > 0.0) {
            return Err(Error::IsolatedPoint { index: i });
        }
        deg.push(s);
    }
    Ok(deg)
}
