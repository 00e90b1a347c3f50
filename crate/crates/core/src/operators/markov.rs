//! Eigen-free backend: the random-walk matrix `P = D^-1 W` and its dyadic powers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::AffinityGraph;

/// Dense operators up to this size cache `P^(2^j)` by repeated squaring.
pub const DYADIC_CACHE_MAX_N: usize = 2048;

/// Compressed sparse rows.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    fn matvec(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * f[j]).sum()).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
pub enum Transition {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

/// Row-stochastic diffusion operator standing in for `H^1`.
#[derive(Clone, Debug)]
pub struct MarkovOperator {
    transition: Transition,
    /// `dyadic_cache[j] = P^(2^j)`.
    dyadic_cache: Vec<DMatrix<f64>>,
    threshold: Option<f64>,
}

/// `P[i][j] = W[i][j] / deg[i]`.
pub fn markov_operator(g: &AffinityGraph) -> Result<MarkovOperator> {
    let w = g.weights();
    let deg = g.degrees();
    if let Some(i) = deg.iter().position(|d| !(*d > 0.0)) {
        return Err(Error::IsolatedPoint { index: i });
    }
    let p = DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] / deg[i]);
    Ok(MarkovOperator {
        transition: Transition::Dense(p),
        dyadic_cache: Vec::new(),
        threshold: None,
    })
}

impl MarkovOperator {
    /// Wraps an arbitrary row-stochastic matrix.
    pub fn from_dense(p: DMatrix<f64>) -> Result<Self> {
        let n = p.nrows();
        if n == 0 || p.ncols() != n {
            return Err(Error::Input("transition matrix must be square and non-empty".into()));
        }
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Input("transition entries must lie in [0, 1]".into()));
        }
        for (i, row) in p.row_iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::Input(format!("row {i} sums to {s}, not 1")));
            }
        }
        Ok(Self {
            transition: Transition::Dense(p),
            dyadic_cache: Vec::new(),
            threshold: None,
        })
    }

    pub fn len(&self) -> usize {
        match &self.transition {
            Transition::Dense(p) => p.nrows(),
            Transition::Sparse(p) => p.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transition(&self) -> &Transition {
        &self.transition
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn cached_levels(&self) -> usize {
        self.dyadic_cache.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.transition {
            Transition::Dense(p) => p.clone(),
            Transition::Sparse(p) => p.to_dense(),
        }
    }

    /// Caches `P^(2^j)` for `j = 0..=j_max` by repeated squaring. Only dense
    /// operators can be cached; sparse ones are returned unchanged.
    pub fn with_dyadic_cache(mut self, j_max: usize) -> Self {
        if let Transition::Dense(p) = &self.transition {
            let mut cache = Vec::with_capacity(j_max + 1);
            cache.push(p.clone());
            for j in 1..=j_max {
                let prev = &cache[j - 1];
                let sq = prev * prev;
                cache.push(sq);
            }
            self.dyadic_cache = cache;
        }
        self
    }

    /// Caches dyadic powers only for dense operators of at most
    /// [`DYADIC_CACHE_MAX_N`] points; larger ones are applied iteratively.
    pub fn with_auto_cache(self, j_max: usize) -> Self {
        if matches!(self.transition, Transition::Dense(_)) && self.len() <= DYADIC_CACHE_MAX_N {
            self.with_dyadic_cache(j_max)
        } else {
            self
        }
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::Input(format!("signal has length {}, operator has {} points", f.len(), self.len())));
        }
        Ok(())
    }

    /// One step, `P f`.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        Ok(self.step(f))
    }

    fn step(&self, f: &[f64]) -> Vec<f64> {
        match &self.transition {
            Transition::Dense(p) => (p * DVector::from_column_slice(f)).data.into(),
            Transition::Sparse(p) => p.matvec(f),
        }
    }

    /// `P^(2^j) f`, from the cache when available, otherwise by applying the
    /// highest cached power (or `P` itself) the required number of times.
    pub fn dyadic_apply(&self, j: usize, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        if j >= usize::BITS as usize - 1 {
            return Err(Error::Parameter(format!("dyadic level {j} too large")));
        }
        if let Some(pj) = self.dyadic_cache.get(j) {
            return Ok((pj * DVector::from_column_slice(f)).data.into());
        }
        let mut out = f.to_vec();
        match self.dyadic_cache.last() {
            Some(top) => {
                let top_level = self.dyadic_cache.len() - 1;
                let mut v = DVector::from_vec(out);
                for _ in 0..(1usize << (j - top_level)) {
                    v = top * v;
                }
                out = v.data.into();
            }
            None => {
                for _ in 0..(1usize << j) {
                    out = self.step(&out);
                }
            }
        }
        Ok(out)
    }

    /// Zeroes entries below `theta` and renormalizes every row to sum to one.
    /// A row with no surviving entry keeps its largest original entry.
    pub fn sparsify(&self, theta: f64) -> Result<MarkovOperator> {
        if !(0.0..1.0).contains(&theta) {
            return Err(Error::Parameter(format!("threshold {theta} must lie in [0, 1)")));
        }
        if theta == 0.0 {
            return Ok(self.clone());
        }
        let dense = self.to_dense();
        let n = dense.nrows();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in dense.row_iter() {
            let start = values.len();
            for (j, &v) in row.iter().enumerate() {
                if v >= theta && v > 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            if values.len() == start {
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                indices.push(best);
                values.push(row[best]);
            }
            let sum: f64 = values[start..].iter().sum();
            values[start..].iter_mut().for_each(|v| *v /= sum);
            indptr.push(values.len());
        }
        Ok(MarkovOperator {
            transition: Transition::Sparse(CsrMatrix { n, indptr, indices, values }),
            dyadic_cache: Vec::new(),
            threshold: Some(theta),
        })
    }
}
