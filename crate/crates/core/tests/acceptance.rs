//! Acceptance suite: one PASS/FAIL line per criterion, plus non-gating
//! stretch and diagnostic lines. Exits nonzero if any gating criterion fails.

use std::path::Path;
use std::time::Instant;

use manifold_scatter::datasets::{load_mnist_idx, mnist_sphere_signals, sample_sphere, sample_sphere_radius};
use manifold_scatter::graph::{gaussian_affinity, PointCloud};
use manifold_scatter::learn::{
    evaluate, kmeans, pca_fit, pca_transform, purity, stratified_split, tree_fit, tree_predict, Dataset, ModelSpec,
    SplitSpec,
};
use manifold_scatter::operators::{
    build_laplacian, epsilon_rule, smallest_eigs, Backend, BackendKind, MarkovOperator,
};
use manifold_scatter::pipeline::{EpsSpec, KernelChoice, PipelineConfig};
use manifold_scatter::scattering::{
    dirac_signals, manifold_embedding, scattering_features, sqrt_wavelet_apply, wavelet_apply, EmbeddingMode,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = Result<(bool, String), String>;

struct Suite {
    failed: Vec<u32>,
}

impl Suite {
    fn gate(&mut self, id: u32, name: &str, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let (pass, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{verdict} [{id:>2}] {name}: {detail} ({:.1} s)", start.elapsed().as_secs_f64());
        if !pass {
            self.failed.push(id);
        }
    }

    fn extra(&self, id: u32, kind: &str, name: &str, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let line = match f() {
            Ok((pass, d)) => format!("{} {d}", if pass { "met" } else { "not met" }),
            Err(e) => format!("error: {e}"),
        };
        println!("{kind} [{id:>2}] {name} (non-gating): {line} ({:.1} s)", start.elapsed().as_secs_f64());
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_cloud(n: usize, dim: usize, seed: u64) -> PointCloud {
    let mut r = rng(seed);
    PointCloud::new((0..3 * n).map(|_| r.random_range(-1.0..1.0)).collect(), 3, dim).unwrap()
}

fn random_signals(count: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..count).map(|_| (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn config(backend: BackendKind, kernel: KernelChoice) -> PipelineConfig {
    PipelineConfig {
        backend,
        kernel,
        kappa: Some(40),
        dim: Some(3),
        knn: Some(5),
        ..Default::default()
    }
}

fn partition_of_unity() -> Check {
    let pc = random_cloud(100, 3, 1);
    let signals = random_signals(50, 100, 2);
    let mut worst: f64 = 0.0;
    for backend in [BackendKind::Spectral, BackendKind::Markov] {
        for kernel in [KernelChoice::Gaussian, KernelChoice::Adaptive] {
            let b = config(backend, kernel).build_backend(&pc).map_err(err)?;
            for f in &signals {
                let bank = wavelet_apply(&b, 8, f).map_err(err)?;
                for i in 0..100 {
                    let s: f64 = bank.iter().map(|w| w[i]).sum();
                    worst = worst.max((f[i] - s).abs());
                }
            }
        }
    }
    Ok((worst <= 1e-10, format!("max |f - sum| = {worst:.2e} over 4 kernel/backend pairs (tol 1e-10)")))
}

fn semigroup_law() -> Check {
    let pc = random_cloud(40, 3, 3);
    let cfg = PipelineConfig { kappa: Some(40), ..config(BackendKind::Spectral, KernelChoice::Gaussian) };
    let Backend::Spectral(op) = cfg.build_backend(&pc).map_err(err)? else { unreachable!() };
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (t, s) = (r.random_range(0.0..10.0), r.random_range(0.0..10.0));
        let f: Vec<f64> = (0..40).map(|_| r.random_range(-1.0..1.0)).collect();
        let lhs = op.heat_apply(t, &op.heat_apply(s, &f).map_err(err)?).map_err(err)?;
        let rhs = op.heat_apply(t + s, &f).map_err(err)?;
        let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        worst = worst.max(norm2(&diff) / norm2(&f));
    }
    Ok((worst <= 1e-9, format!("max relative error {worst:.2e} over 20 (t, s, f) (tol 1e-9)")))
}

fn markov_dyadic() -> Check {
    let pc = random_cloud(20, 3, 5);
    let cfg = config(BackendKind::Markov, KernelChoice::Adaptive);
    let Backend::Markov(cached) = cfg.build_backend(&pc).map_err(err)? else { unreachable!() };
    let plain = MarkovOperator::from_dense(cached.to_dense()).map_err(err)?;
    let f = &random_signals(1, 20, 6)[0];
    let mut worst: f64 = 0.0;
    for j in 0..=5 {
        let mut seq = f.clone();
        for _ in 0..(1 << j) {
            seq = plain.apply(&seq).map_err(err)?;
        }
        for op in [&cached, &plain] {
            let d = op.dyadic_apply(j, f).map_err(err)?;
            worst = worst.max(d.iter().zip(&seq).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    Ok((worst <= 1e-10, format!("max deviation {worst:.2e} for j = 0..5, cached and uncached (tol 1e-10)")))
}

fn sphere_eigs(n: usize, seed: u64, c: f64) -> Result<Vec<f64>, String> {
    let pc = sample_sphere(n, seed).map_err(err)?;
    let eps = epsilon_rule(n, 2, c).map_err(err)?;
    let l = build_laplacian(&gaussian_affinity(&pc, eps).map_err(err)?, eps).map_err(err)?;
    Ok(smallest_eigs(&l, 9).map_err(err)?.eigenvalues().to_vec())
}

fn band_errors(ev: &[f64]) -> (f64, f64) {
    let e1 = ev[1..4].iter().map(|v| (v - 2.0).abs() / 2.0).fold(0.0, f64::max);
    let e2 = ev[4..9].iter().map(|v| (v - 6.0).abs() / 6.0).fold(0.0, f64::max);
    (e1, e2)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

struct SpectrumRun {
    best_c: f64,
    best_eigs: Vec<f64>,
}

fn sphere_spectrum(run: &mut Option<SpectrumRun>) -> Check {
    let mut best: Option<(f64, f64, f64, f64, Vec<f64>)> = None;
    let mut summary = Vec::new();
    for c in [0.5, 1.0, 2.0, 4.0] {
        let ev = sphere_eigs(2000, 0, c)?;
        let (e1, e2) = band_errors(&ev);
        summary.push(format!("c={c}: l1..3 err {:.0}%, l4..8 err {:.0}%", 100.0 * e1, 100.0 * e2));
        let score = (e1 / 0.25).max(e2 / 0.30);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, c, e1, e2, ev));
        }
    }
    let (_, c, e1, e2, ev) = best.expect("four bandwidths tried");
    let band_ok = e1 <= 0.25 && e2 <= 0.30;
    let err_at = |n: usize| -> Result<f64, String> {
        let per_seed = (0..5)
            .map(|s| sphere_eigs(n, 100 + s, c).map(|ev| ev[1..4].iter().map(|v| (v - 2.0).abs()).sum::<f64>() / 3.0))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(median(per_seed))
    };
    let (small, large) = (err_at(1000)?, err_at(4000)?);
    *run = Some(SpectrumRun { best_c: c, best_eigs: ev.clone() });
    Ok((
        band_ok && large < small,
        format!(
            "best c = {c}: eigenvalues 1-8 = [{}], band errors {:.0}% (tol 25%) / {:.0}% (tol 30%); \
             median l1..3 error N=1000 {small:.4}, N=4000 {large:.4}; sweep {}",
            ev[1..9].iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", "),
            100.0 * e1,
            100.0 * e2,
            summary.join("; ")
        ),
    ))
}

fn mnist_fixture() -> Result<(Vec<manifold_scatter::datasets::GrayImage>, Vec<u8>), String> {
    let d = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/mnist");
    load_mnist_idx(&d.join("mnist1500-images-idx3-ubyte"), &d.join("mnist1500-labels-idx1-ubyte")).map_err(err)
}

fn mnist_config() -> PipelineConfig {
    PipelineConfig {
        backend: BackendKind::Spectral,
        kernel: KernelChoice::Gaussian,
        max_scale: 8,
        max_moment: 4,
        order: 2,
        kappa: Some(200),
        dim: Some(2),
        eps: EpsSpec::Auto,
        ..Default::default()
    }
}

fn holdout_accuracy(x: Vec<Vec<f64>>, y: Vec<usize>, test_fraction: f64, seed: u64) -> Result<(f64, usize, usize), String> {
    let data = Dataset::new(x, y).map_err(err)?;
    let (train, test) = stratified_split(&data.y, test_fraction, seed).map_err(err)?;
    let model = ModelSpec::knn(5).with_pca(Some(10));
    let pred = model.fit_predict(&data.subset(&train), &data.subset(&test).x).map_err(err)?;
    let correct = test.iter().zip(&pred).filter(|(&i, &p)| data.y[i] == p).count();
    Ok((correct as f64 / test.len() as f64, train.len(), test.len()))
}

struct MnistShared {
    cloud: PointCloud,
    backend: Backend,
}

fn mnist_binary(shared: &mut Option<MnistShared>) -> Check {
    let (images, labels) = mnist_fixture()?;
    let keep: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] <= 1).collect();
    let imgs: Vec<_> = keep.iter().map(|&i| images[i].clone()).collect();
    let labs: Vec<u8> = keep.iter().map(|&i| labels[i]).collect();
    let cloud = sample_sphere(642, 0).map_err(err)?;
    let data = mnist_sphere_signals(&imgs, &labs, &cloud, 300, 1).map_err(err)?;
    let cfg = mnist_config();
    let backend = cfg.build_backend(&cloud).map_err(err)?;
    let rows = cfg.extract(&backend, &data.signals).map_err(err)?;
    let x = rows.into_iter().map(|r| r.values).collect();
    let (acc, n_train, n_test) = holdout_accuracy(x, data.labels, 1.0 / 3.0, 2)?;
    *shared = Some(MnistShared { cloud, backend });
    Ok((acc >= 0.90, format!("digits 0/1, {n_train} train / {n_test} test, accuracy {acc:.3} (threshold 0.90)")))
}

fn mnist_ten_class(shared: &Option<MnistShared>) -> Check {
    let shared = shared.as_ref().ok_or("binary run did not complete")?;
    let (images, labels) = mnist_fixture()?;
    let data = mnist_sphere_signals(&images, &labels, &shared.cloud, 1200, 3).map_err(err)?;
    let rows = mnist_config().extract(&shared.backend, &data.signals).map_err(err)?;
    let x = rows.into_iter().map(|r| r.values).collect();
    let (acc, n_train, n_test) = holdout_accuracy(x, data.labels, 1.0 / 6.0, 4)?;
    Ok((acc >= 0.60, format!("10 classes, {n_train} train / {n_test} test, accuracy {acc:.3} (target 0.60)")))
}

fn spectral_full(n: usize, seed: u64) -> Result<Backend, String> {
    let cfg = PipelineConfig { kappa: Some(n), ..config(BackendKind::Spectral, KernelChoice::Gaussian) };
    cfg.build_backend(&random_cloud(n, 3, seed)).map_err(err)
}

fn nonexpansive_frame() -> Check {
    let b = spectral_full(60, 7)?;
    let mut worst = f64::NEG_INFINITY;
    for f in random_signals(100, 60, 8) {
        let bank = wavelet_apply(&b, 8, &f).map_err(err)?;
        let energy: f64 = bank[1..].iter().map(|w| norm2(w).powi(2)).sum::<f64>() + norm2(&bank[0]).powi(2);
        worst = worst.max(energy - norm2(&f).powi(2));
    }
    Ok((worst <= 1e-9, format!("max (output energy - input energy) = {worst:.2e} over 100 signals (tol 1e-9)")))
}

fn sqrt_isometry() -> Check {
    let b = spectral_full(60, 7)?;
    let op = b.as_spectral().expect("spectral");
    let mut worst: f64 = 0.0;
    for f in random_signals(100, 60, 9) {
        let bank = sqrt_wavelet_apply(op, 8, &f).map_err(err)?;
        let energy: f64 = bank.iter().map(|w| norm2(w).powi(2)).sum();
        worst = worst.max((energy - norm2(&f).powi(2)).abs());
    }
    Ok((worst <= 1e-8, format!("max |output energy - input energy| = {worst:.2e} over 100 signals (tol 1e-8)")))
}

fn permutation_invariance() -> Check {
    let n = 80;
    let pc = random_cloud(n, 3, 10);
    let signals = random_signals(3, n, 11);
    let mut r = rng(12);
    let mut worst: f64 = 0.0;
    for backend in [BackendKind::Spectral, BackendKind::Markov] {
        let cfg = PipelineConfig { kappa: Some(30), ..config(backend, KernelChoice::Gaussian) };
        let base = cfg.run(&pc, &signals).map_err(err)?;
        for _ in 0..10 {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut r);
            let moved = pc.permuted(&perm).map_err(err)?;
            let moved_signals: Vec<Vec<f64>> = signals.iter().map(|f| perm.iter().map(|&i| f[i]).collect()).collect();
            let got = cfg.run(&moved, &moved_signals).map_err(err)?;
            for (a, b) in base.values.iter().flatten().zip(got.values.iter().flatten()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok((worst <= 1e-12, format!("max feature change {worst:.2e} over 10 permutations x 2 backends (tol 1e-12)")))
}

fn constant_annihilation() -> Check {
    let pc = random_cloud(100, 3, 13);
    let cfg = PipelineConfig { order: 3, ..config(BackendKind::Markov, KernelChoice::Adaptive) };
    let backend = cfg.build_backend(&pc).map_err(err)?;
    let fv = scattering_features(&backend, &cfg.scattering(), &[1.0; 100]).map_err(err)?;
    let (mut zeroth, mut higher): (f64, f64) = (0.0, 0.0);
    for (v, l) in fv.values.iter().zip(&fv.labels) {
        if l.scales.is_empty() {
            zeroth = zeroth.max((v - 1.0).abs());
        } else {
            higher = higher.max(v.abs());
        }
    }
    Ok((
        zeroth <= 1e-12 && higher <= 1e-12,
        format!("max |zeroth - 1| = {zeroth:.2e}, max higher-order moment = {higher:.2e} (tol 1e-12)"),
    ))
}

fn learn_sanity() -> Check {
    let mut r = rng(14);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..100 {
        let c = (i % 2) as f64 * 20.0;
        x.push(vec![c + r.sample::<f64, _>(StandardNormal), r.sample(StandardNormal)]);
        y.push(i % 2);
    }
    let km = kmeans(&x, 2, 15, 100).map_err(err)?;
    let pur = purity(&km.assignments, &y);

    let xor = Dataset::new(vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]], vec![0, 1, 1, 0])
        .map_err(err)?;
    let tree = tree_fit(&xor, 2, 1).map_err(err)?;
    let pred = tree_predict(&tree, &xor.x).map_err(err)?;
    let tree_acc = pred.iter().zip(&xor.y).filter(|(a, b)| a == b).count() as f64 / 4.0;

    let m = random_signals(20, 6, 16);
    let model = pca_fit(&m, 6).map_err(err)?;
    let back = model.inverse_transform(&pca_transform(&model, &m).map_err(err)?);
    let recon = m.iter().flatten().zip(back.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((
        pur == 1.0 && tree_acc == 1.0 && recon <= 1e-8,
        format!("k-means purity {pur}, XOR tree accuracy {tree_acc}, PCA reconstruction error {recon:.2e} (tol 1e-8)"),
    ))
}

fn manifold_loo(kernel: KernelChoice) -> Result<(f64, usize), String> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..20u64 {
        let (radius, label) = if i % 2 == 0 { (1.0, 0) } else { (1.5, 1) };
        let pc = sample_sphere_radius(100, radius, 1000 + i).map_err(err)?;
        let cfg = PipelineConfig {
            backend: BackendKind::Markov,
            kernel,
            knn: Some(3),
            max_scale: 8,
            max_moment: 4,
            order: 3,
            dim: Some(2),
            eps: EpsSpec::Value(epsilon_rule(100, 2, 2.0).map_err(err)?),
            ..Default::default()
        };
        let backend = cfg.build_backend(&pc).map_err(err)?;
        let diracs = dirac_signals(100, 8, i).map_err(err)?;
        let fv = manifold_embedding(&backend, &cfg.scattering(), &diracs, EmbeddingMode::Concat).map_err(err)?;
        x.push(fv.values);
        y.push(label);
    }
    let width = x[0].len();
    let data = Dataset::new(x, y).map_err(err)?;
    let report = evaluate(&data, &ModelSpec::knn(5), SplitSpec::LeaveOneOut, 0).map_err(err)?;
    Ok((report.accuracy, width))
}

fn manifold_classification() -> Check {
    let (acc, width) = manifold_loo(KernelChoice::Adaptive)?;
    Ok((
        acc >= 0.9,
        format!("radius 1 vs 1.5, adaptive kernel k=3, {width} features per cloud, leave-one-out accuracy {acc:.2} (threshold 0.90)"),
    ))
}

fn main() {
    println!("acceptance suite");
    let mut s = Suite { failed: Vec::new() };
    s.gate(1, "partition of unity", partition_of_unity);
    s.gate(2, "semigroup law", semigroup_law);
    s.gate(3, "Markov dyadic powers", markov_dyadic);

    let mut spectrum = None;
    s.gate(4, "sphere spectrum convergence", || sphere_spectrum(&mut spectrum));
    s.extra(4, "DIAG", "sphere spectrum with the kernel constant removed", || {
        let run = spectrum.as_ref().ok_or("spectrum run did not complete")?;
        // L converges to (pi/4) * density * (-Laplacian); on the unit sphere that is -Laplacian / 16
        let scaled: Vec<f64> = run.best_eigs.iter().map(|v| 16.0 * v).collect();
        let (e1, e2) = band_errors(&scaled);
        Ok((
            e1 <= 0.25 && e2 <= 0.30,
            format!(
                "c = {}: 16 x eigenvalues 1-8 = [{}], band errors {:.0}% / {:.0}%",
                run.best_c,
                scaled[1..9].iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", "),
                100.0 * e1,
                100.0 * e2
            ),
        ))
    });

    let mut mnist = None;
    s.gate(5, "spherical MNIST, digits 0/1", || {
        let start = Instant::now();
        let (pass, detail) = mnist_binary(&mut mnist)?;
        let secs = start.elapsed().as_secs_f64();
        Ok((pass && secs < 600.0, format!("{detail}; runtime {secs:.0} s (limit 600 s)")))
    });
    s.extra(5, "STRETCH", "spherical MNIST, 10 classes", || mnist_ten_class(&mnist));

    s.gate(6, "nonexpansive frame", nonexpansive_frame);
    s.gate(7, "square-root wavelet isometry", sqrt_isometry);
    s.gate(8, "permutation invariance", permutation_invariance);
    s.gate(9, "constant-signal annihilation", constant_annihilation);
    s.gate(10, "learning harness sanity", learn_sanity);
    s.gate(11, "manifold classification", manifold_classification);
    s.extra(11, "DIAG", "same task with the fixed-bandwidth Gaussian kernel", || {
        let (acc, _) = manifold_loo(KernelChoice::Gaussian)?;
        Ok((acc >= 0.9, format!("leave-one-out accuracy {acc:.2}")))
    });

    if s.failed.is_empty() {
        println!("all gating criteria passed");
    } else {
        println!("failed criteria: {:?}", s.failed);
        std::process::exit(1);
    }
}
