use crate::error::{Error, Result};
use crate::operators::{HeatSemigroup, SpectralHeatOperator};

fn check_signal(len: usize, f: &[f64]) -> Result<()> {
    if f.len() != len {
        return Err(Error::Input(format!("signal has length {}, backend has {len} points", f.len())));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite signal value".into()));
    }
    Ok(())
}

/// `[W_0 f, W_1 f, ..., W_J f, A_J f]`.
///
/// `W_0` uses the exact identity, so whatever a truncated backend drops from
/// `H^1 f` lands in `W_0 f` and the outputs always sum back to `f`.
pub fn wavelet_apply<B: HeatSemigroup + ?Sized>(backend: &B, max_scale: usize, f: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_signal(backend.len(), f)?;
    let lowpass = backend.dyadic_cascade(f, max_scale)?;
    let mut out = Vec::with_capacity(max_scale + 2);
    out.push(f.iter().zip(&lowpass[0]).map(|(a, b)| a - b).collect());
    for j in 1..=max_scale {
        out.push(lowpass[j - 1].iter().zip(&lowpass[j]).map(|(a, b)| a - b).collect());
    }
    out.push(lowpass[max_scale].clone());
    Ok(out)
}

/// Square-root filter bank over the eigenbasis:
/// `sqrt(1 - g)`, `sqrt(g^(2^(j-1)) - g^(2^j))`, `sqrt(g^(2^J))` with
/// `g = exp(-tau lambda)`.
///
/// The component of `f` outside the retained eigenvectors is treated as
/// fully attenuated (`g = 0`) and assigned to `W_0`, which keeps the bank an
/// isometry for any truncation order.
pub fn sqrt_wavelet_apply(op: &SpectralHeatOperator, max_scale: usize, f: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_signal(op.len(), f)?;
    let coeffs = op.coefficients(f)?;
    let g: Vec<f64> = (0..op.kappa()).map(|k| op.multiplier(k).min(1.0)).collect();
    let power = |k: usize, j: usize| g[k].powf((1u64 << j) as f64);

    let projected = op.synthesize(&coeffs, |_| 1.0);
    let mut w0 = op.synthesize(&coeffs, |k| (1.0 - g[k]).max(0.0).sqrt());
    for ((w, fi), pi) in w0.iter_mut().zip(f).zip(&projected) {
        *w += fi - pi;
    }
    let mut out = Vec::with_capacity(max_scale + 2);
    out.push(w0);
    for j in 1..=max_scale {
        out.push(op.synthesize(&coeffs, |k| (power(k, j - 1) - power(k, j)).max(0.0).sqrt()));
    }
    out.push(op.synthesize(&coeffs, |k| power(k, max_scale).sqrt()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{adaptive_affinity, gaussian_affinity, PointCloud};
    use crate::operators::{build_laplacian, markov_operator, smallest_eigs};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new((0..3 * n).map(|_| rng.random_range(-1.0..1.0)).collect(), 3, 2).unwrap()
    }

    fn signal(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
    }

    #[test]
    fn telescoping_markov_and_spectral() {
        let pc = cloud(25, 1);
        let f = signal(25, 2);
        let markov = markov_operator(&adaptive_affinity(&pc, 3).unwrap()).unwrap().with_dyadic_cache(5);
        let spectral = smallest_eigs(&build_laplacian(&gaussian_affinity(&pc, 0.4).unwrap(), 0.4).unwrap(), 7).unwrap();
        for bank in [wavelet_apply(&markov, 5, &f).unwrap(), wavelet_apply(&spectral, 5, &f).unwrap()] {
            assert_eq!(bank.len(), 7);
            for i in 0..25 {
                let s: f64 = bank.iter().map(|b| b[i]).sum();
                assert!((s - f[i]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn constant_signal_markov() {
        let op = markov_operator(&adaptive_affinity(&cloud(12, 3), 2).unwrap()).unwrap();
        let bank = wavelet_apply(&op, 4, &[1.0; 12]).unwrap();
        for w in &bank[..5] {
            assert!(w.iter().all(|v| v.abs() < 1e-12));
        }
        assert!(bank[5].iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn markov_matches_dense_power_oracle() {
        let op = markov_operator(&adaptive_affinity(&cloud(6, 4), 2).unwrap()).unwrap();
        let p = op.to_dense();
        let f = signal(6, 5);
        let bank = wavelet_apply(&op, 3, &f).unwrap();
        let powers: Vec<DMatrix<f64>> = (0..=3)
            .map(|j| {
                let mut m = DMatrix::identity(6, 6);
                for _ in 0..(1 << j) {
                    m = &m * &p;
                }
                m
            })
            .collect();
        let fv = DVector::from_vec(f.clone());
        let mut expect = vec![(DMatrix::identity(6, 6) - &powers[0]) * &fv];
        for j in 1..=3 {
            expect.push((&powers[j - 1] - &powers[j]) * &fv);
        }
        expect.push(&powers[3] * &fv);
        for (got, want) in bank.iter().zip(&expect) {
            assert!(got.iter().zip(want.iter()).all(|(a, b)| (a - b).abs() <= 1e-10));
        }
    }

    #[test]
    fn sqrt_isometry_and_dense_oracle() {
        let pc = cloud(5, 6);
        let op = smallest_eigs(&build_laplacian(&gaussian_affinity(&pc, 0.5).unwrap(), 0.5).unwrap(), 5).unwrap();
        let f = signal(5, 7);
        let bank = sqrt_wavelet_apply(&op, 2, &f).unwrap();
        let energy: f64 = bank.iter().flatten().map(|v| v * v).sum();
        let fe: f64 = f.iter().map(|v| v * v).sum();
        assert!((energy - fe).abs() <= 1e-8 * fe.max(1.0));

        let u = op.eigenvectors();
        let filt = |h: &dyn Fn(f64) -> f64| {
            let mut m = DMatrix::zeros(5, 5);
            for k in 0..5 {
                let w = h((-op.eigenvalues()[k]).exp());
                m += u.column(k) * u.column(k).transpose() * w;
            }
            m * DVector::from_vec(f.clone())
        };
        let expect = [
            filt(&|g| (1.0 - g).max(0.0).sqrt()),
            filt(&|g| (g - g * g).max(0.0).sqrt()),
            filt(&|g| (g * g - g.powi(4)).max(0.0).sqrt()),
            filt(&|g| g.powi(4).sqrt()),
        ];
        for (got, want) in bank.iter().zip(&expect) {
            assert!(got.iter().zip(want.iter()).all(|(a, b)| (a - b).abs() <= 1e-10));
        }
    }

    #[test]
    fn sqrt_on_lowest_mode() {
        let pc = cloud(8, 8);
        let op = smallest_eigs(&build_laplacian(&gaussian_affinity(&pc, 0.5).unwrap(), 0.5).unwrap(), 8).unwrap();
        let u0: Vec<f64> = op.eigenvectors().column(0).iter().copied().collect();
        let bank = sqrt_wavelet_apply(&op, 3, &u0).unwrap();
        assert!(bank[0].iter().all(|v| v.abs() < 1e-7));
        assert!(bank[4].iter().zip(&u0).all(|(a, b)| (a - b).abs() < 1e-7));
    }

    #[test]
    fn length_mismatch() {
        let op = markov_operator(&adaptive_affinity(&cloud(5, 9), 2).unwrap()).unwrap();
        assert!(matches!(wavelet_apply(&op, 2, &[1.0; 4]), Err(Error::Input(_))));
    }
}
