use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::wavelets::{sqrt_wavelet_apply, wavelet_apply};
use super::{PathLabel, ScatteringConfig, WaveletVariant};
use crate::error::{Error, Result};
use crate::operators::{Backend, HeatSemigroup};

/// Scattering moments of one signal (or one manifold) in canonical order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub labels: Vec<PathLabel>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `(1/N) sum_i |v_i|^q`.
pub fn lq_moment(v: &[f64], q: u32) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let q = q as i32;
    v.iter().map(|x| x.abs().powi(q)).sum::<f64>() / v.len() as f64
}

fn push_moments(out: &mut Vec<f64>, v: &[f64], max_moment: u32) {
    out.extend((1..=max_moment).map(|q| lq_moment(v, q)));
}

fn abs_all(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.abs()).collect()
}

/// Zeroth- through third-order moments of `f` on `backend`.
pub fn scattering_features(backend: &Backend, cfg: &ScatteringConfig, f: &[f64]) -> Result<FeatureVector> {
    cfg.validate()?;
    if backend.kind() != cfg.backend {
        return Err(Error::Config(format!(
            "configuration asks for the {:?} backend but a {:?} backend was supplied",
            cfg.backend,
            backend.kind()
        )));
    }
    let big_j = cfg.max_scale;
    let bank = |v: &[f64]| -> Result<Vec<Vec<f64>>> {
        match cfg.wavelets {
            WaveletVariant::Plain => wavelet_apply(backend, big_j, v),
            WaveletVariant::Sqrt => {
                let op = backend
                    .as_spectral()
                    .ok_or_else(|| Error::Config("square-root wavelets require the spectral backend".into()))?;
                sqrt_wavelet_apply(op, big_j, v)
            }
        }
    };

    let q = cfg.max_moment;
    let mut values = Vec::with_capacity(cfg.feature_count());
    if f.len() != backend.len() {
        return Err(Error::Input(format!("signal has length {}, backend has {} points", f.len(), backend.len())));
    }
    push_moments(&mut values, f, q);

    let first = bank(f)?;
    for w in &first[..=big_j] {
        push_moments(&mut values, w, q);
    }
    if cfg.max_order >= 2 {
        let mut second_layer: Vec<((usize, usize), Vec<f64>)> = Vec::new();
        for j in 0..big_j {
            let inner = bank(&abs_all(&first[j]))?;
            for (j2, w) in inner.iter().enumerate().take(big_j + 1).skip(j + 1) {
                push_moments(&mut values, w, q);
                if cfg.max_order >= 3 && j2 < big_j {
                    second_layer.push(((j, j2), abs_all(w)));
                }
            }
        }
        // second_layer is filled in lexicographic (j, j') order
        if cfg.max_order >= 3 {
            for ((_, j2), u) in &second_layer {
                let inner = bank(u)?;
                for w in &inner[(j2 + 1)..=big_j] {
                    push_moments(&mut values, w, q);
                }
            }
        }
    }
    debug_assert_eq!(values.len(), cfg.feature_count());
    Ok(FeatureVector {
        values,
        labels: cfg.labels(),
    })
}

/// Features of many signals, computed in parallel; output order follows input order.
pub fn extract_many(backend: &Backend, cfg: &ScatteringConfig, signals: &[Vec<f64>]) -> Result<Vec<FeatureVector>> {
    signals.par_iter().map(|f| scattering_features(backend, cfg, f)).collect()
}

/// `count` one-hot signals at distinct indices.
///
/// Indices are the first `count` entries of a partial Fisher-Yates shuffle of
/// `0..n`: for `i` in `0..count`, swap position `i` with a position drawn
/// uniformly from `i..n`. Randomness comes from ChaCha8 seeded with `seed`.
pub fn dirac_signals(n: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 || count > n {
        return Err(Error::Parameter(format!("Dirac count {count} must lie in 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let r = rng.random_range(i..n);
        idx.swap(i, r);
    }
    Ok(idx[..count]
        .iter()
        .map(|&at| {
            let mut v = vec![0.0; n];
            v[at] = 1.0;
            v
        })
        .collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingMode {
    /// Per-signal features joined end to end.
    #[default]
    Concat,
    /// Entrywise average over signals.
    Mean,
}

/// One representation for the whole point cloud from a family of probe signals.
pub fn manifold_embedding(
    backend: &Backend,
    cfg: &ScatteringConfig,
    signals: &[Vec<f64>],
    mode: EmbeddingMode,
) -> Result<FeatureVector> {
    if signals.is_empty() {
        return Err(Error::Parameter("manifold embedding needs at least one signal".into()));
    }
    let per_signal = extract_many(backend, cfg, signals)?;
    match mode {
        EmbeddingMode::Concat => {
            let mut values = Vec::with_capacity(per_signal.len() * cfg.feature_count());
            let mut labels = Vec::with_capacity(values.capacity());
            for fv in per_signal {
                values.extend(fv.values);
                labels.extend(fv.labels);
            }
            Ok(FeatureVector { values, labels })
        }
        EmbeddingMode::Mean => {
            let count = per_signal.len() as f64;
            let mut acc = vec![0.0; cfg.feature_count()];
            for fv in &per_signal {
                acc.iter_mut().zip(&fv.values).for_each(|(a, v)| *a += v);
            }
            acc.iter_mut().for_each(|a| *a /= count);
            Ok(FeatureVector {
                values: acc,
                labels: cfg.labels(),
            })
        }
    }
}
