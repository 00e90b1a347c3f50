//! End-to-end configuration shared by the command-line tool and the C ABI:
//! point cloud to graph to heat backend to scattering features.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::files;
use crate::graph::{adaptive_affinity, gaussian_affinity, AffinityGraph, PointCloud};
use crate::operators::{
    build_laplacian, epsilon_rule, markov_operator, smallest_eigs, Backend, BackendKind, SpectralHeatOperator,
    DEFAULT_EPS_CONSTANT,
};
use crate::scattering::{extract_many, FeatureTable, FeatureVector, ScatteringConfig, WaveletVariant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    Gaussian,
    Adaptive,
}

/// Kernel bandwidth: a fixed value or `c * N^(-1 / (d/2 + 3))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsSpec {
    Auto,
    Value(f64),
}

impl FromStr for EpsSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("auto") {
            return Ok(EpsSpec::Auto);
        }
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("eps must be a positive number or \"auto\", got {s:?}")))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter(format!("eps = {v} must be positive and finite")));
        }
        Ok(EpsSpec::Value(v))
    }
}

impl fmt::Display for EpsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsSpec::Auto => f.write_str("auto"),
            EpsSpec::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Every tunable of the extraction pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub backend: BackendKind,
    pub kernel: KernelChoice,
    #[serde(rename = "J")]
    pub max_scale: usize,
    #[serde(rename = "Q")]
    pub max_moment: u32,
    pub order: usize,
    pub kappa: Option<usize>,
    pub eps: EpsSpec,
    pub eps_const: f64,
    /// Intrinsic dimension `d`; required by the Gaussian kernel and by `eps = auto`.
    pub dim: Option<usize>,
    pub knn: Option<usize>,
    pub tau: f64,
    /// Markov sparsification threshold.
    pub threshold: Option<f64>,
    pub wavelets: WaveletVariant,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Spectral,
            kernel: KernelChoice::Gaussian,
            max_scale: 8,
            max_moment: 4,
            order: 2,
            kappa: None,
            eps: EpsSpec::Auto,
            eps_const: DEFAULT_EPS_CONSTANT,
            dim: None,
            knn: None,
            tau: 1.0,
            threshold: None,
            wavelets: WaveletVariant::Plain,
        }
    }
}

/// Keys understood by [`PipelineConfig::set`], spelled like the CLI flags.
pub const PIPELINE_KEYS: &[&str] = &[
    "backend", "kernel", "J", "Q", "order", "kappa", "eps", "eps-const", "dim", "knn", "tau", "threshold", "wavelets",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parameter(format!("{key}: cannot parse {value:?}")))
}

impl PipelineConfig {
    pub fn scattering(&self) -> ScatteringConfig {
        ScatteringConfig {
            max_scale: self.max_scale,
            max_moment: self.max_moment,
            max_order: self.order,
            backend: self.backend,
            wavelets: self.wavelets,
        }
    }

    /// Sets one option from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "backend" => {
                self.backend = match v {
                    "spectral" => BackendKind::Spectral,
                    "markov" => BackendKind::Markov,
                    _ => return Err(Error::Parameter(format!("unknown backend {v:?}"))),
                }
            }
            "kernel" => {
                self.kernel = match v {
                    "gaussian" => KernelChoice::Gaussian,
                    "adaptive" => KernelChoice::Adaptive,
                    _ => return Err(Error::Parameter(format!("unknown kernel {v:?}"))),
                }
            }
            "wavelets" => {
                self.wavelets = match v {
                    "plain" => WaveletVariant::Plain,
                    "sqrt" => WaveletVariant::Sqrt,
                    _ => return Err(Error::Parameter(format!("unknown wavelet variant {v:?}"))),
                }
            }
            "J" => self.max_scale = parse_num(key, v)?,
            "Q" => self.max_moment = parse_num(key, v)?,
            "order" => self.order = parse_num(key, v)?,
            "kappa" => self.kappa = Some(parse_num(key, v)?),
            "eps" => self.eps = v.parse()?,
            "eps-const" => self.eps_const = parse_num(key, v)?,
            "dim" => self.dim = Some(parse_num(key, v)?),
            "knn" => self.knn = Some(parse_num(key, v)?),
            "tau" => self.tau = parse_num(key, v)?,
            "threshold" => self.threshold = Some(parse_num(key, v)?),
            _ => return Err(Error::Config(format!("unknown option {key:?}"))),
        }
        Ok(())
    }

    /// Checks option combinations that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        self.scattering().validate()?;
        if self.backend == BackendKind::Spectral && self.kappa.is_none() {
            return Err(Error::Config("the spectral backend requires kappa".into()));
        }
        if self.kappa == Some(0) {
            return Err(Error::Parameter("kappa must be at least 1".into()));
        }
        if self.kernel == KernelChoice::Adaptive && self.knn.is_none() {
            return Err(Error::Config("the adaptive kernel requires knn".into()));
        }
        if self.knn == Some(0) {
            return Err(Error::Parameter("knn must be at least 1".into()));
        }
        if self.dim == Some(0) {
            return Err(Error::Parameter("dim must be at least 1".into()));
        }
        if self.needs_dim() && self.dim.is_none() {
            return Err(Error::Config(
                "intrinsic dimension (dim) is required for the Gaussian kernel and for eps = auto".into(),
            ));
        }
        if !(self.eps_const > 0.0 && self.eps_const.is_finite()) {
            return Err(Error::Parameter(format!("eps-const = {} must be positive", self.eps_const)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Parameter(format!("tau = {} must be positive", self.tau)));
        }
        if let Some(t) = self.threshold {
            if self.backend != BackendKind::Markov {
                return Err(Error::Config("threshold applies only to the markov backend".into()));
            }
            if !(0.0..1.0).contains(&t) {
                return Err(Error::Parameter(format!("threshold {t} outside [0, 1)")));
            }
        }
        Ok(())
    }

    fn uses_eps(&self) -> bool {
        self.kernel == KernelChoice::Gaussian || self.backend == BackendKind::Spectral
    }

    fn needs_dim(&self) -> bool {
        self.kernel == KernelChoice::Gaussian || (self.uses_eps() && self.eps == EpsSpec::Auto)
    }

    /// Bandwidth for an `n`-point cloud, or `None` when nothing uses it.
    pub fn resolve_eps(&self, n: usize) -> Result<Option<f64>> {
        if !self.uses_eps() {
            return Ok(None);
        }
        match self.eps {
            EpsSpec::Value(v) => Ok(Some(v)),
            EpsSpec::Auto => {
                let d = self.dim.ok_or_else(|| Error::Config("eps = auto requires dim".into()))?;
                epsilon_rule(n, d, self.eps_const).map(Some)
            }
        }
    }

    /// Interprets coordinate rows as a point cloud with this config's intrinsic dimension.
    ///
    /// When no dimension is configured nothing downstream reads it, and the
    /// ambient dimension is recorded instead.
    pub fn point_cloud(&self, rows: &[Vec<f64>]) -> Result<PointCloud> {
        let ambient = rows.first().map_or(0, Vec::len);
        PointCloud::from_rows(rows, self.dim.unwrap_or(ambient.max(1)))
    }

    pub fn load_points(&self, path: &Path) -> Result<PointCloud> {
        let rows = crate::datasets::parse_matrix_csv(&files::read_to_string(path)?, &path.display().to_string())?;
        self.point_cloud(&rows)
    }

    pub fn affinity(&self, pc: &PointCloud) -> Result<AffinityGraph> {
        match self.kernel {
            KernelChoice::Gaussian => {
                let eps = self.resolve_eps(pc.len())?.expect("gaussian kernel uses eps");
                gaussian_affinity(pc, eps)
            }
            KernelChoice::Adaptive => adaptive_affinity(pc, self.knn.expect("validated")),
        }
    }

    /// The `kappa` smallest eigenpairs of the cloud's graph Laplacian.
    pub fn eigenpairs(&self, pc: &PointCloud) -> Result<SpectralHeatOperator> {
        let kappa = self.kappa.ok_or_else(|| Error::Config("eigenpairs require kappa".into()))?;
        if kappa > pc.len() {
            return Err(Error::Parameter(format!("kappa = {kappa} exceeds the {} points", pc.len())));
        }
        let eps = match self.resolve_eps(pc.len())? {
            Some(e) => e,
            None => self.with_backend(BackendKind::Spectral).resolve_eps(pc.len())?.expect("spectral uses eps"),
        };
        let l = build_laplacian(&self.affinity(pc)?, eps)?;
        smallest_eigs(&l, kappa)
    }

    fn with_backend(&self, backend: BackendKind) -> Self {
        Self { backend, ..self.clone() }
    }

    /// Builds the configured heat backend for `pc`.
    pub fn build_backend(&self, pc: &PointCloud) -> Result<Backend> {
        self.validate()?;
        match self.backend {
            BackendKind::Spectral => Ok(Backend::Spectral(self.eigenpairs(pc)?.with_time_scale(self.tau)?)),
            BackendKind::Markov => {
                let mut op = markov_operator(&self.affinity(pc)?)?;
                if let Some(t) = self.threshold {
                    op = op.sparsify(t)?;
                }
                Ok(Backend::Markov(op.with_auto_cache(self.max_scale)))
            }
        }
    }

    /// Spectral backend from precomputed eigenpairs, with this config's `tau`.
    pub fn backend_from_eigenpairs(&self, op: SpectralHeatOperator) -> Result<Backend> {
        if self.backend != BackendKind::Spectral {
            return Err(Error::Config("precomputed eigenpairs require the spectral backend".into()));
        }
        self.scattering().validate()?;
        Ok(Backend::Spectral(op.with_time_scale(self.tau)?))
    }

    /// Features for every signal, one row each.
    pub fn extract(&self, backend: &Backend, signals: &[Vec<f64>]) -> Result<Vec<FeatureVector>> {
        extract_many(backend, &self.scattering(), signals)
    }

    /// Config as echoed into feature files, including the resolved bandwidth.
    pub fn provenance(&self, n_points: usize) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Ok(Some(eps)) = self.resolve_eps(n_points) {
            v["eps_resolved"] = serde_json::json!(eps);
        }
        v["n_points"] = serde_json::json!(n_points);
        v
    }

    /// Convenience: build, extract and tabulate.
    pub fn run(&self, pc: &PointCloud, signals: &[Vec<f64>]) -> Result<FeatureTable> {
        let backend = self.build_backend(pc)?;
        let rows = self.extract(&backend, signals)?;
        FeatureTable::from_vectors(self.provenance(pc.len()), &rows)
    }
}

/// Flat `key = value` file; blank lines and `#` comments are skipped, and keys
/// may carry a leading `--`.
pub fn parse_config_text(text: &str, origin: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{origin}:{}: expected key = value", i + 1)))?;
        let key = k.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("{origin}:{}: empty key", i + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("{origin}:{}: duplicate key {key:?}", i + 1)));
        }
    }
    Ok(out)
}

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_config_text(&files::read_to_string(path)?, &path.display().to_string())
}
