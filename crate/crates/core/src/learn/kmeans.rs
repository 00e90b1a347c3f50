use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_matrix, sq_dist};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansResult {
    pub fn inertia(&self) -> f64 {
        self.inertia_history.last().copied().unwrap_or(0.0)
    }
}

fn plus_plus_init(x: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![x[rng.random_range(0..x.len())].clone()];
    let mut d2: Vec<f64> = x.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..x.len())
        };
        let c = x[pick].clone();
        for (d, p) in d2.iter_mut().zip(x) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(x: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    x.iter()
        .map(|p| {
            centroids
                .iter()
                .enumerate()
                .map(|(c, m)| (c, sq_dist(p, m)))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        })
        .unzip()
}

/// k-means++ seeding followed by Lloyd iterations until the assignment is a
/// fixpoint or `max_iters` updates have run.
///
/// A cluster left empty by an update is re-seeded at the point currently
/// farthest from its own centroid.
pub fn kmeans(x: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<KMeansResult> {
    let f = check_matrix(x)?;
    if k == 0 || k > x.len() {
        return Err(Error::Parameter(format!("K = {k} outside 1..={}", x.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(x, k, &mut rng);
    let (mut assignments, mut dist) = assign(x, &centroids);
    let mut inertia_history = vec![dist.iter().sum::<f64>()];
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let mut sums = vec![vec![0.0; f]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in x.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..x.len())
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                    .unwrap_or(0);
                centroids[c] = x[far].clone();
                dist[far] = 0.0;
            }
        }
        let (next, next_dist) = assign(x, &centroids);
        let inertia: f64 = next_dist.iter().sum();
        debug_assert!(
            inertia <= inertia_history.last().unwrap() * (1.0 + 1e-12) + 1e-300,
            "k-means inertia increased"
        );
        inertia_history.push(inertia);
        let converged = next == assignments;
        assignments = next;
        dist = next_dist;
        if converged {
            break;
        }
    }
    Ok(KMeansResult { assignments, centroids, inertia_history, iterations })
}

/// Normalized histogram of cluster assignments.
pub fn cluster_proportions(assignments: &[usize], k: usize) -> Result<Vec<f64>> {
    if assignments.is_empty() {
        return Err(Error::Input("no assignments".into()));
    }
    let mut p = vec![0.0; k];
    for &a in assignments {
        if a >= k {
            return Err(Error::Input(format!("cluster {a} out of range for K = {k}")));
        }
        p[a] += 1.0;
    }
    let n = assignments.len() as f64;
    p.iter_mut().for_each(|v| *v /= n);
    Ok(p)
}

/// Fraction of points whose cluster's majority label equals their own label.
pub fn purity(assignments: &[usize], labels: &[usize]) -> f64 {
    use std::collections::{BTreeMap, HashMap};
    let mut table: HashMap<usize, BTreeMap<usize, usize>> = HashMap::new();
    for (&a, &l) in assignments.iter().zip(labels) {
        *table.entry(a).or_default().entry(l).or_default() += 1;
    }
    let hit: usize = table.values().map(|m| m.values().copied().max().unwrap_or(0)).sum();
    hit as f64 / assignments.len().max(1) as f64
}
