//! Golden feature files on a fixed 30-point cloud.
//!
//! The expected values come from a dense reference implementation written
//! here with plain nested loops: kernels from their closed forms, the heat
//! semigroup from a Taylor-series matrix exponential (scaling and squaring)
//! and the Markov powers from repeated dense multiplication. Regenerate with
//! `cargo test -p manifold-scatter --test golden -- --ignored`.

#![allow(clippy::needless_range_loop)]

use std::path::{Path, PathBuf};
use std::process::Command;

use manifold_scatter::datasets::{parse_matrix_csv, sample_sphere, save_pointcloud_csv, save_signals_csv};
use manifold_scatter::scattering::{FeatureTable, FeatureVector, PathLabel};

type Mat = Vec<Vec<f64>>;

fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden")
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            for j in 0..m {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn identity(n: usize) -> Mat {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn matvec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect()).collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `exp(a)` by scaling, a 30-term Taylor series and repeated squaring.
fn expm(a: &Mat) -> Mat {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let scaled: Mat = a.iter().map(|r| r.iter().map(|v| v / 2f64.powi(s)).collect()).collect();
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..=30 {
        term = matmul(&term, &scaled);
        term.iter_mut().flatten().for_each(|v| *v /= k as f64);
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = matmul(&sum, &sum);
    }
    sum
}

fn gaussian_kernel(pts: &Mat, eps: f64, d: usize) -> Mat {
    let c = eps.powf(-(d as f64) / 2.0);
    pts.iter().map(|x| pts.iter().map(|y| c * (-dist2(x, y) / eps).exp()).collect()).collect()
}

fn adaptive_kernel(pts: &Mat, k: usize) -> Mat {
    let sigma: Vec<f64> = (0..pts.len())
        .map(|i| {
            let mut d: Vec<f64> = (0..pts.len()).filter(|&j| j != i).map(|j| dist2(&pts[i], &pts[j]).sqrt()).collect();
            d.sort_by(f64::total_cmp);
            d[k - 1]
        })
        .collect();
    (0..pts.len())
        .map(|i| {
            (0..pts.len())
                .map(|j| {
                    let r = dist2(&pts[i], &pts[j]);
                    0.5 * ((-r / (sigma[i] * sigma[i])).exp() + (-r / (sigma[j] * sigma[j])).exp())
                })
                .collect()
        })
        .collect()
}

/// `[H^1, H^2, H^4, ..., H^(2^J)]` for `H = exp(-tau L)`, `L = (D - W) / (eps N)`.
fn heat_powers(w: &Mat, eps: f64, tau: f64, j_max: usize) -> Vec<Mat> {
    let n = w.len();
    let deg: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    (0..=j_max)
        .map(|j| {
            let t = tau * 2f64.powi(j as i32) / (eps * n as f64);
            let a: Mat = (0..n)
                .map(|r| (0..n).map(|c| t * w[r][c] - if r == c { t * deg[r] } else { 0.0 }).collect())
                .collect();
            expm(&a)
        })
        .collect()
}

fn markov_powers(w: &Mat, j_max: usize) -> Vec<Mat> {
    let p: Mat = w
        .iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|v| v / s).collect()
        })
        .collect();
    (0..=j_max)
        .map(|j| {
            let mut m = identity(w.len());
            for _ in 0..(1usize << j) {
                m = matmul(&m, &p);
            }
            m
        })
        .collect()
}

/// Dense `[W_0, ..., W_J]` from the lowpass powers.
fn wavelets(powers: &[Mat]) -> Vec<Mat> {
    let mut out = vec![sub(&identity(powers[0].len()), &powers[0])];
    for j in 1..powers.len() {
        out.push(sub(&powers[j - 1], &powers[j]));
    }
    out
}

fn moment(v: &[f64], q: u32) -> f64 {
    v.iter().map(|x| x.abs().powi(q as i32)).sum::<f64>() / v.len() as f64
}

/// Moments in canonical order: path order, then lexicographic scales, then q.
fn oracle_features(wav: &[Mat], f: &[f64], q_max: u32, order: usize) -> FeatureVector {
    let nj = wav.len();
    let abs = |v: Vec<f64>| v.into_iter().map(f64::abs).collect::<Vec<_>>();
    let mut entries: Vec<(Vec<usize>, Vec<f64>)> = vec![(vec![], f.to_vec())];
    for a in 0..nj {
        entries.push((vec![a], abs(matvec(&wav[a], f))));
    }
    if order >= 2 {
        for a in 0..nj {
            for b in a + 1..nj {
                entries.push((vec![a, b], abs(matvec(&wav[b], &abs(matvec(&wav[a], f))))));
            }
        }
    }
    if order >= 3 {
        for a in 0..nj {
            for b in a + 1..nj {
                for c in b + 1..nj {
                    let inner = abs(matvec(&wav[b], &abs(matvec(&wav[a], f))));
                    entries.push((vec![a, b, c], abs(matvec(&wav[c], &inner))));
                }
            }
        }
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (scales, v) in entries {
        for q in 1..=q_max {
            values.push(moment(&v, q));
            labels.push(PathLabel { scales: scales.clone(), q });
        }
    }
    FeatureVector { values, labels }
}

struct Case {
    name: &'static str,
    args: &'static [&'static str],
}

const J: usize = 4;
const Q: u32 = 3;
const ORDER: usize = 3;

const CASES: &[Case] = &[
    Case {
        name: "spectral",
        args: &[
            "--backend", "spectral", "--kernel", "gaussian", "--eps", "0.5", "--dim", "2", "--kappa", "30", "--tau",
            "1", "--J", "4", "--Q", "3", "--order", "3",
        ],
    },
    Case {
        name: "markov",
        args: &["--backend", "markov", "--kernel", "adaptive", "--knn", "4", "--J", "4", "--Q", "3", "--order", "3"],
    },
];

fn oracle_table(case: &Case, pts: &Mat, signals: &Mat) -> FeatureTable {
    let powers = match case.name {
        "spectral" => heat_powers(&gaussian_kernel(pts, 0.5, 2), 0.5, 1.0, J),
        _ => markov_powers(&adaptive_kernel(pts, 4), J),
    };
    let wav = wavelets(&powers);
    let rows: Vec<FeatureVector> = signals.iter().map(|f| oracle_features(&wav, f, Q, ORDER)).collect();
    FeatureTable::from_vectors(serde_json::json!({ "args": case.args }), &rows).unwrap()
}

fn read_matrix(name: &str) -> Mat {
    let p = dir().join(name);
    parse_matrix_csv(&std::fs::read_to_string(&p).unwrap(), name).unwrap()
}

#[test]
#[ignore]
fn regenerate_golden() {
    std::fs::create_dir_all(dir()).unwrap();
    let pc = sample_sphere(30, 2024).unwrap();
    save_pointcloud_csv(&dir().join("points30.csv"), &pc).unwrap();
    let pts: Mat = pc.points().map(<[f64]>::to_vec).collect();
    let signals: Mat = vec![
        pts.iter().map(|p| p[0] + 0.5 * p[1] * p[2]).collect(),
        (0..30).map(|i| if i % 3 == 0 { 1.0 } else { -0.25 * (i % 5) as f64 }).collect(),
    ];
    save_signals_csv(&dir().join("signals30.csv"), &signals).unwrap();
    for case in CASES {
        let table = oracle_table(case, &pts, &signals);
        std::fs::write(dir().join(format!("golden_{}.json", case.name)), table.to_json()).unwrap();
    }
}

fn close(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> Result<(), String> {
    for (i, (ra, rb)) in a.iter().zip(b).enumerate() {
        if ra.len() != rb.len() {
            return Err(format!("row {i}: {} vs {} features", ra.len(), rb.len()));
        }
        for (k, (x, y)) in ra.iter().zip(rb).enumerate() {
            if (x - y).abs() > tol {
                return Err(format!("row {i} feature {k}: {x} vs {y}"));
            }
        }
    }
    if a.len() != b.len() {
        return Err(format!("{} vs {} rows", a.len(), b.len()));
    }
    Ok(())
}

#[test]
fn committed_golden_matches_oracle() {
    let pts = read_matrix("points30.csv");
    let signals = read_matrix("signals30.csv");
    for case in CASES {
        let golden = FeatureTable::load(&dir().join(format!("golden_{}.json", case.name))).unwrap();
        let fresh = oracle_table(case, &pts, &signals);
        assert_eq!(golden.labels(), fresh.labels());
        close(&golden.values, &fresh.values, 1e-13).unwrap_or_else(|e| panic!("{}: {e}", case.name));
    }
}

#[test]
fn cli_reproduces_golden() {
    let tmp = tempfile::tempdir().unwrap();
    for case in CASES {
        let golden = FeatureTable::load(&dir().join(format!("golden_{}.json", case.name))).unwrap();
        assert_eq!(golden.n_features(), 3 * 26);
        let out = tmp.path().join(format!("{}.json", case.name));
        let status = Command::new(env!("CARGO_BIN_EXE_mscatter"))
            .arg("extract")
            .arg("--points")
            .arg(dir().join("points30.csv"))
            .arg("--signals")
            .arg(dir().join("signals30.csv"))
            .args(case.args)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "{}: {status}", case.name);
        let got = FeatureTable::load(&out).unwrap();
        assert_eq!(got.labels(), golden.labels(), "{}", case.name);
        close(&got.values, &golden.values, 1e-10).unwrap_or_else(|e| panic!("{}: {e}", case.name));
    }
}
