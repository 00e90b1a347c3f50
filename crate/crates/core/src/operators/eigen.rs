//! Smallest eigenpairs of symmetric matrices.
//!
//! Small problems, or ones asking for a large share of the spectrum, go
//! through a full dense decomposition. When only a few eigenpairs of a large
//! matrix are wanted, Lanczos with full reorthogonalization is used instead
//! and falls back to the dense route if it stalls. Either way every returned
//! pair is checked against the residual bound before it is handed out.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest admissible `|A u - lambda u|_2` for a returned eigenpair.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EigenMethod {
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Eigenvalues ascending, eigenvectors as matching columns.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// The `kappa` smallest eigenpairs of the symmetric matrix `a`.
///
/// Eigenvector signs are normalized so the entry of largest magnitude is
/// positive (first such entry on ties).
pub fn smallest_eigenpairs(a: &DMatrix<f64>, kappa: usize, method: EigenMethod) -> Result<Eigenpairs> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Input(format!("matrix is {}x{}, not square", n, a.ncols())));
    }
    if kappa == 0 || kappa > n {
        return Err(Error::Parameter(format!("kappa = {kappa} must lie in 1..={n}")));
    }
    let use_lanczos = match method {
        EigenMethod::Dense => false,
        EigenMethod::Lanczos => true,
        EigenMethod::Auto => n > 800 && kappa * 6 < n,
    };
    let mut pairs = if use_lanczos {
        match lanczos_smallest(a, kappa) {
            Some(p) if max_residual(a, &p).0 <= RESIDUAL_TOL => p,
            _ => dense_smallest(a, kappa),
        }
    } else {
        dense_smallest(a, kappa)
    };
    fix_signs(&mut pairs.vectors);
    let (res, at) = max_residual(a, &pairs);
    if !(res <= RESIDUAL_TOL) {
        return Err(Error::Numerical(format!(
            "eigenpair {at} has residual {res:.3e} > {RESIDUAL_TOL:e} (lambda = {:.6e}, n = {n}, kappa = {kappa})",
            pairs.values[at]
        )));
    }
    Ok(pairs)
}

fn dense_smallest(a: &DMatrix<f64>, kappa: usize) -> Eigenpairs {
    let eig = SymmetricEigen::new(a.clone());
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order.truncate(kappa);
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), kappa, |r, c| eig.eigenvectors[(r, order[c])]);
    Eigenpairs { values, vectors }
}

fn lanczos_smallest(a: &DMatrix<f64>, kappa: usize) -> Option<Eigenpairs> {
    let n = a.nrows();
    let max_dim = n.min((8 * kappa + 200).max(400));
    let mut rng = ChaCha8Rng::seed_from_u64(0x01a2_c205);
    let norm_est = a.amax() * n as f64;

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(max_dim);
    let mut alpha: Vec<f64> = Vec::with_capacity(max_dim);
    let mut beta: Vec<f64> = Vec::with_capacity(max_dim);

    let mut q = random_unit(n, &mut rng);
    loop {
        let m = basis.len();
        let mut w = a * &q;
        let am = q.dot(&w);
        w.axpy(-am, &q, 1.0);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            w.axpy(-b, prev, 1.0);
        }
        basis.push(q);
        alpha.push(am);
        reorthogonalize(&mut w, &basis);
        let mut bm = w.norm();
        let dim = m + 1;

        let exhausted = bm <= 1e-12 * norm_est.max(1.0);
        if dim >= kappa && (dim.is_multiple_of(20) || dim == max_dim || exhausted) {
            let (vals, s) = tridiag_eigen(&alpha, &beta);
            let converged = (0..kappa).all(|i| (bm * s[(dim - 1, i)]).abs() <= 1e-2 * RESIDUAL_TOL);
            if converged || dim == max_dim {
                if !converged {
                    return None;
                }
                let mut vectors = DMatrix::zeros(n, kappa);
                for (k, qk) in basis.iter().enumerate() {
                    for c in 0..kappa {
                        let coef = s[(k, c)];
                        vectors.column_mut(c).axpy(coef, qk, 1.0);
                    }
                }
                return Some(Eigenpairs {
                    values: vals[..kappa].to_vec(),
                    vectors,
                });
            }
        }
        if dim == max_dim {
            return None;
        }
        if exhausted {
            // invariant subspace: continue from a fresh direction orthogonal to it
            let mut fresh = random_unit(n, &mut rng);
            reorthogonalize(&mut fresh, &basis);
            let nf = fresh.norm();
            if nf < 1e-8 {
                return None;
            }
            w = fresh / nf;
            bm = 0.0;
        } else {
            w /= bm;
        }
        beta.push(bm);
        q = w;
    }
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let norm = v.norm();
    v / norm
}

fn reorthogonalize(w: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(w);
            w.axpy(-c, b, 1.0);
        }
    }
}

/// Ascending eigen-decomposition of the tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`.
fn tridiag_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

fn fix_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Largest residual norm and the index where it occurs.
fn max_residual(a: &DMatrix<f64>, pairs: &Eigenpairs) -> (f64, usize) {
    let av = a * &pairs.vectors;
    let mut worst = (0.0f64, 0usize);
    for (k, &lam) in pairs.values.iter().enumerate() {
        let r = (av.column(k) - pairs.vectors.column(k) * lam).norm();
        if !(r <= worst.0) {
            worst = (r, k);
        }
    }
    worst
}
