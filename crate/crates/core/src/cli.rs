//! The `mscatter` command-line tool.
//!
//! Options may also come from a flat `key = value` file given with
//! `--config`; flags take precedence over the file, which takes precedence
//! over built-in defaults.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::datasets::{
    load_labels_csv, load_mnist_idx, load_signals_csv, mnist_sphere_signals, sample_sphere_radius,
    save_labels_csv, save_pointcloud_csv, save_signals_csv,
};
use crate::error::{Error, Result};
use crate::files;
use crate::learn::{evaluate, Dataset, ModelSpec, SplitSpec};
use crate::operators::SpectralHeatOperator;
use crate::pipeline::{load_config_file, PipelineConfig, PIPELINE_KEYS};
use crate::scattering::{dirac_signals, manifold_embedding, EmbeddingMode, FeatureTable, FeatureTableFormat};

#[derive(Parser, Debug)]
#[command(name = "mscatter", version, about = "Manifold scattering features for point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample points uniformly from a sphere in R^3.
    GenSphere(GenSphereArgs),
    /// Project MNIST digits onto a spherical point cloud.
    MnistSphere(MnistSphereArgs),
    /// Compute scattering features for signals on a point cloud.
    Extract(ExtractArgs),
    /// Smallest Laplacian eigenpairs of a point cloud.
    Eigs(EigsArgs),
    /// Train and score a classifier on a feature file.
    Classify(ClassifyArgs),
}

#[derive(Args, Debug, Default)]
pub struct ConfigArg {
    /// Flat key = value file supplying defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct PipelineFlags {
    #[arg(long, value_parser = ["spectral", "markov"])]
    pub backend: Option<String>,
    #[arg(long, value_parser = ["gaussian", "adaptive"])]
    pub kernel: Option<String>,
    /// Largest wavelet scale.
    #[arg(long = "J")]
    pub j: Option<String>,
    /// Largest moment exponent.
    #[arg(long = "Q")]
    pub q: Option<String>,
    /// Deepest scattering path order (1-3).
    #[arg(long)]
    pub order: Option<String>,
    /// Number of eigenpairs for the spectral backend.
    #[arg(long)]
    pub kappa: Option<String>,
    /// Kernel bandwidth, or "auto".
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long = "eps-const")]
    pub eps_const: Option<String>,
    /// Intrinsic dimension of the sampled manifold.
    #[arg(long)]
    pub dim: Option<String>,
    /// Neighbour rank for the adaptive kernel.
    #[arg(long)]
    pub knn: Option<String>,
    /// Diffusion time scale of the spectral backend.
    #[arg(long)]
    pub tau: Option<String>,
    /// Sparsification threshold for the Markov backend.
    #[arg(long)]
    pub threshold: Option<String>,
    #[arg(long, value_parser = ["plain", "sqrt"])]
    pub wavelets: Option<String>,
}

impl PipelineFlags {
    fn pairs(&self) -> [(&'static str, &Option<String>); 13] {
        [
            ("backend", &self.backend),
            ("kernel", &self.kernel),
            ("J", &self.j),
            ("Q", &self.q),
            ("order", &self.order),
            ("kappa", &self.kappa),
            ("eps", &self.eps),
            ("eps-const", &self.eps_const),
            ("dim", &self.dim),
            ("knn", &self.knn),
            ("tau", &self.tau),
            ("threshold", &self.threshold),
            ("wavelets", &self.wavelets),
        ]
    }
}

#[derive(Args, Debug)]
pub struct GenSphereArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Number of points.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MnistSphereArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// IDX image file.
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// IDX label file.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Point cloud CSV on the unit sphere.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Number of digits to project.
    #[arg(long)]
    pub count: Option<usize>,
    /// Keep only these digit classes, e.g. "0,1".
    #[arg(long)]
    pub digits: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Signals CSV to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Labels CSV to write.
    #[arg(long = "out-labels")]
    pub out_labels: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
    /// Point cloud CSV.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Signals CSV, one signal per row.
    #[arg(long)]
    pub signals: Option<PathBuf>,
    /// Use this many seeded Dirac signals instead of a signals file.
    #[arg(long)]
    pub diracs: Option<usize>,
    /// Eigenpair file from `eigs`, replacing the eigensolve.
    #[arg(long)]
    pub eigs: Option<PathBuf>,
    /// Collapse all signals into one manifold-level row.
    #[arg(long, value_parser = ["concat", "mean"])]
    pub embed: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output format; defaults to the output file's extension.
    #[arg(long, value_parser = ["json", "csv"])]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EigsArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// JSON eigenpair file, or a CSV list of eigenvalues when the name ends in .csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Feature file from `extract` (JSON or CSV).
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Labels CSV, one per feature row.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_parser = ["knn", "tree"])]
    pub model: Option<String>,
    /// Neighbours for the k-NN model.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "max-depth")]
    pub max_depth: Option<usize>,
    #[arg(long = "min-leaf")]
    pub min_leaf: Option<usize>,
    /// Principal components kept after standardization.
    #[arg(long)]
    pub pca: Option<usize>,
    /// Skip per-column standardization.
    #[arg(long = "no-standardize")]
    pub no_standardize: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "test-frac")]
    pub test_frac: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Leave-one-out evaluation.
    #[arg(long)]
    pub loo: bool,
    /// Report JSON; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const OTHER_KEYS: &[&str] = &[
    "n", "radius", "seed", "out", "images", "labels", "points", "count", "digits", "out-labels", "signals",
    "diracs", "eigs", "embed", "format", "features", "model", "k", "max-depth", "min-leaf", "pca", "standardize",
    "test-frac", "folds", "loo",
];

/// Values from the config file, looked up when a flag is absent.
struct Settings {
    file: BTreeMap<String, String>,
    origin: String,
}

impl Settings {
    fn load(arg: &ConfigArg) -> Result<Self> {
        let Some(path) = &arg.config else {
            return Ok(Self { file: BTreeMap::new(), origin: String::new() });
        };
        let file = load_config_file(path)?;
        if let Some(bad) = file.keys().find(|k| !PIPELINE_KEYS.contains(&k.as_str()) && !OTHER_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("{}: unknown option {bad:?}", path.display())));
        }
        Ok(Self { file, origin: path.display().to_string() })
    }

    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("{}: cannot parse {key} = {v:?}", self.origin))),
        }
    }

    fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.pick(flag, key)?
            .ok_or_else(|| Error::Config(format!("missing required option --{key}")))
    }

    fn flag(&self, set: bool, key: &str) -> Result<bool> {
        Ok(set || self.pick::<bool>(None, key)?.unwrap_or(false))
    }

    fn pipeline(&self, flags: &PipelineFlags) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        for key in PIPELINE_KEYS {
            if let Some(v) = self.file.get(*key) {
                cfg.set(key, v)?;
            }
        }
        for (key, v) in flags.pairs() {
            if let Some(v) = v {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

fn gen_sphere(a: GenSphereArgs) -> Result<()> {
    let s = Settings::load(&a.config)?;
    let n = s.require(a.n, "n")?;
    let radius = s.pick(a.radius, "radius")?.unwrap_or(1.0);
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Parameter(format!("radius {radius} must be positive")));
    }
    let pc = sample_sphere_radius(n, radius, s.pick(a.seed, "seed")?.unwrap_or(0))?;
    save_pointcloud_csv(&s.require(a.out, "out")?, &pc)
}

fn parse_digits(text: &str) -> Result<Vec<u8>> {
    text.split(',')
        .map(|t| match t.trim().parse::<u8>() {
            Ok(d) if d <= 9 => Ok(d),
            _ => Err(Error::Parameter(format!("bad digit {t:?} in --digits"))),
        })
        .collect()
}

fn mnist_sphere(a: MnistSphereArgs) -> Result<()> {
    let s = Settings::load(&a.config)?;
    let images_path: PathBuf = s.require(a.images, "images")?;
    let labels_path: PathBuf = s.require(a.labels, "labels")?;
    let points: PathBuf = s.require(a.points, "points")?;
    let count = s.require(a.count, "count")?;
    let seed = s.pick(a.seed, "seed")?.unwrap_or(0);
    let out: PathBuf = s.require(a.out, "out")?;
    let out_labels: PathBuf = s.require(a.out_labels, "out-labels")?;
    let digits = s.pick(a.digits, "digits")?.map(|d| parse_digits(&d)).transpose()?;

    let cloud = crate::datasets::load_pointcloud_csv(&points, 2)?;
    let (mut images, mut labels) = load_mnist_idx(&images_path, &labels_path)?;
    if let Some(keep) = digits {
        let mask: Vec<bool> = labels.iter().map(|l| keep.contains(l)).collect();
        let mut it = mask.iter();
        images.retain(|_| *it.next().unwrap());
        labels.retain(|l| keep.contains(l));
    }
    let data = mnist_sphere_signals(&images, &labels, &cloud, count, seed)?;
    save_signals_csv(&out, &data.signals)?;
    save_labels_csv(&out_labels, &data.labels)
}

fn extract(a: ExtractArgs) -> Result<()> {
    let s = Settings::load(&a.config)?;
    let cfg = s.pipeline(&a.pipeline)?;
    let out: PathBuf = s.require(a.out, "out")?;
    let format = match s.pick(a.format, "format")?.as_deref() {
        Some("csv") => FeatureTableFormat::Csv,
        Some("json") => FeatureTableFormat::Json,
        Some(other) => return Err(Error::Parameter(format!("unknown format {other:?}"))),
        None => FeatureTableFormat::from_path(&out),
    };
    let embed = match s.pick(a.embed, "embed")?.as_deref() {
        None => None,
        Some("concat") => Some(EmbeddingMode::Concat),
        Some("mean") => Some(EmbeddingMode::Mean),
        Some(other) => return Err(Error::Parameter(format!("unknown embedding {other:?}"))),
    };
    let eigs: Option<PathBuf> = s.pick(a.eigs, "eigs")?;
    let signals_path: Option<PathBuf> = s.pick(a.signals, "signals")?;
    let diracs = s.pick(a.diracs, "diracs")?;
    let seed = s.pick(a.seed, "seed")?.unwrap_or(0);

    let backend = match &eigs {
        Some(path) => cfg.backend_from_eigenpairs(SpectralHeatOperator::load_json(path)?)?,
        None => {
            let points: PathBuf = s.require(a.points, "points")?;
            cfg.validate()?;
            cfg.build_backend(&cfg.load_points(&points)?)?
        }
    };
    let n = crate::operators::HeatSemigroup::len(&backend);
    let signals = match (&signals_path, diracs) {
        (Some(p), None) => load_signals_csv(p)?,
        (None, Some(count)) => dirac_signals(n, count, seed)?,
        _ => return Err(Error::Config("give exactly one of --signals and --diracs".into())),
    };
    let rows = match embed {
        None => cfg.extract(&backend, &signals)?,
        Some(mode) => vec![manifold_embedding(&backend, &cfg.scattering(), &signals, mode)?],
    };
    let mut prov = cfg.provenance(n);
    prov["n_signals"] = serde_json::json!(signals.len());
    if let Some(p) = &signals_path {
        prov["signals"] = serde_json::json!(p.display().to_string());
    }
    if let Some(c) = diracs {
        prov["diracs"] = serde_json::json!(c);
        prov["seed"] = serde_json::json!(seed);
    }
    if let Some(p) = &eigs {
        prov["eigs"] = serde_json::json!(p.display().to_string());
    }
    if let Some(mode) = embed {
        prov["embed"] = serde_json::to_value(mode).expect("mode serializes");
    }
    FeatureTable::from_vectors(prov, &rows)?.write(&out, format)
}

fn eigs(a: EigsArgs) -> Result<()> {
    let s = Settings::load(&a.config)?;
    let mut cfg = s.pipeline(&a.pipeline)?;
    cfg.backend = crate::operators::BackendKind::Spectral;
    cfg.wavelets = Default::default();
    cfg.threshold = None;
    cfg.validate()?;
    let points: PathBuf = s.require(a.points, "points")?;
    let out: PathBuf = s.require(a.out, "out")?;
    let op = cfg.eigenpairs(&cfg.load_points(&points)?)?;
    if FeatureTableFormat::from_path(&out) == FeatureTableFormat::Csv {
        let mut text = String::from("index,eigenvalue\n");
        for (i, v) in op.eigenvalues().iter().enumerate() {
            text.push_str(&format!("{i},{v}\n"));
        }
        files::write_atomic(&out, text.as_bytes())
    } else {
        let json = serde_json::to_string_pretty(&op.to_file()).expect("eigenpairs serialize");
        files::write_atomic(&out, json.as_bytes())
    }
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let s = Settings::load(&a.config)?;
    let features_path: PathBuf = s.require(a.features, "features")?;
    let labels_path: PathBuf = s.require(a.labels, "labels")?;
    let table = FeatureTable::load(&features_path)?;
    let data = Dataset::new(table.values, load_labels_csv(&labels_path)?)?;

    let mut model = match s.pick(a.model, "model")?.as_deref().unwrap_or("knn") {
        "knn" => ModelSpec::knn(s.pick(a.k, "k")?.unwrap_or(5)),
        "tree" => ModelSpec::tree(
            s.pick(a.max_depth, "max-depth")?.unwrap_or(5),
            s.pick(a.min_leaf, "min-leaf")?.unwrap_or(2),
        ),
        other => return Err(Error::Parameter(format!("unknown model {other:?}"))),
    };
    model = model.with_pca(s.pick(a.pca, "pca")?);
    let standardize = s.pick::<bool>(None, "standardize")?.unwrap_or(true) && !a.no_standardize;
    model = model.with_standardize(standardize);

    let folds = s.pick(a.folds, "folds")?;
    let test_frac = s.pick(a.test_frac, "test-frac")?;
    let split = match (s.flag(a.loo, "loo")?, folds, test_frac) {
        (true, None, None) => SplitSpec::LeaveOneOut,
        (false, Some(folds), None) => SplitSpec::KFold { folds },
        (false, None, frac) => SplitSpec::Holdout { test_fraction: frac.unwrap_or(0.25) },
        _ => return Err(Error::Config("--loo, --folds and --test-frac are mutually exclusive".into())),
    };
    let seed = s.pick(a.seed, "seed")?.unwrap_or(0);
    let report = evaluate(&data, &model, split, seed)?;
    let mut json = serde_json::to_value(&report).expect("report serializes");
    json["features"] = serde_json::json!(features_path.display().to_string());
    json["labels"] = serde_json::json!(labels_path.display().to_string());
    let text = serde_json::to_string_pretty(&json).expect("report serializes");
    eprintln!("accuracy {:.4} ({} test predictions)", report.accuracy, report.n_test);
    match s.pick::<PathBuf>(a.out, "out")? {
        Some(out) => files::write_atomic(&out, text.as_bytes()),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Runs a parsed command.
pub fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSphere(a) => gen_sphere(a),
        Command::MnistSphere(a) => mnist_sphere(a),
        Command::Extract(a) => extract(a),
        Command::Eigs(a) => eigs(a),
        Command::Classify(a) => classify(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 success, 2 usage or configuration, 3 input data,
/// 4 numerical failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
