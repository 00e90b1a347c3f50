//! C ABI for `manifold-scatter`.
//!
//! All objects cross the boundary as opaque handles created by an `ms_*_new`
//! style function and released with the matching `ms_*_free`. Every fallible
//! call returns an [`MsStatus`]; on failure a description is available from
//! [`ms_last_error`] on the same thread until the next failing call.
//!
//! Input arrays are copied once on entry and never modified. Output arrays
//! are owned by their handle and stay valid until it is freed. Handles other
//! than [`MsConfig`] are immutable and may be shared between threads.

use std::borrow::Cow;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use manifold_scatter::datasets::sample_sphere;
use manifold_scatter::graph::PointCloud;
use manifold_scatter::pipeline::PipelineConfig;
use manifold_scatter::Error;

/// Status codes; the nonzero values match the `mscatter` exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MsStatus {
    Ok = 0,
    /// A panic inside the library was caught at the boundary.
    Internal = 1,
    /// Bad parameter, incompatible options or a null argument.
    Usage = 2,
    /// Malformed or inconsistent input data.
    Data = 3,
    /// Numerical failure such as an isolated point.
    Numerical = 4,
}

/// Pipeline options, mutable through [`ms_config_set`].
pub struct MsConfig {
    inner: PipelineConfig,
}

pub struct MsPointCloud {
    inner: PointCloud,
}

/// Row-major feature matrix with one label per column.
pub struct MsFeatures {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    labels: Vec<CString>,
}

/// `kappa` eigenvalues and an `n x kappa` row-major eigenvector block.
pub struct MsEigenpairs {
    n: usize,
    kappa: usize,
    values: Vec<f64>,
    vectors: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MsStatus {
    match e.exit_code() {
        2 => MsStatus::Usage,
        3 => MsStatus::Data,
        4 => MsStatus::Numerical,
        _ => MsStatus::Internal,
    }
}

struct Fail(MsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn usage(msg: &str) -> Fail {
    Fail(MsStatus::Usage, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            MsStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| usage(&format!("{what} is null")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(usage(&format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(usage(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| usage(&format!("{what} is not valid UTF-8")))
}

/// The cloud as the pipeline sees it: the config's `dim`, when set, replaces
/// the intrinsic dimension recorded on the cloud.
fn with_config_dim<'a>(cfg: &PipelineConfig, pc: &'a PointCloud) -> Result<Cow<'a, PointCloud>, Fail> {
    match cfg.dim {
        Some(d) if d != pc.intrinsic_dim() => Ok(Cow::Owned(PointCloud::new(pc.coords().to_vec(), pc.ambient_dim(), d)?)),
        _ => Ok(Cow::Borrowed(pc)),
    }
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(usage("output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn ms_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New config with the library defaults.
#[no_mangle]
pub extern "C" fn ms_config_new() -> *mut MsConfig {
    Box::into_raw(Box::new(MsConfig { inner: PipelineConfig::default() }))
}

/// # Safety
/// `cfg` must be null or a handle from [`ms_config_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ms_config_free(cfg: *mut MsConfig) {
    free(cfg)
}

/// Sets one option by its CLI name without the leading dashes
/// (`backend`, `kernel`, `J`, `Q`, `order`, `kappa`, `eps`, `eps-const`,
/// `dim`, `knn`, `tau`, `threshold`, `wavelets`).
///
/// # Safety
/// `cfg` must be a live config handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn ms_config_set(cfg: *mut MsConfig, key: *const c_char, value: *const c_char) -> MsStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| usage("config is null"))?;
        let key = text(key, "key")?;
        let key = key.trim_start_matches("--");
        cfg.inner.set(key, text(value, "value")?)?;
        Ok(())
    })
}

/// Checks option combinations that do not depend on the data.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn ms_config_validate(cfg: *const MsConfig) -> MsStatus {
    guard(|| Ok(deref(cfg, "config")?.inner.validate()?))
}

/// Point cloud from `n_points * ambient_dim` row-major coordinates.
/// `intrinsic_dim = 0` records the ambient dimension. A `dim` option set on
/// the config takes precedence during extraction.
///
/// # Safety
/// `coords` must point to `n_points * ambient_dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_cloud_new(
    coords: *const f64,
    n_points: usize,
    ambient_dim: usize,
    intrinsic_dim: usize,
    out: *mut *mut MsPointCloud,
) -> MsStatus {
    guard(|| {
        let len = n_points
            .checked_mul(ambient_dim)
            .ok_or_else(|| Fail(MsStatus::Data, "coordinate count overflows".into()))?;
        let coords = slice(coords, len, "coords")?.to_vec();
        let d = if intrinsic_dim == 0 { ambient_dim } else { intrinsic_dim };
        store(out, MsPointCloud { inner: PointCloud::new(coords, ambient_dim, d)? })
    })
}

/// `n` points drawn uniformly from the unit sphere in R^3.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_sample_sphere(n: usize, seed: u64, out: *mut *mut MsPointCloud) -> MsStatus {
    guard(|| store(out, MsPointCloud { inner: sample_sphere(n, seed)? }))
}

/// # Safety
/// `cloud` must be a live cloud handle.
#[no_mangle]
pub unsafe extern "C" fn ms_cloud_len(cloud: *const MsPointCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.inner.len())
}

/// # Safety
/// `cloud` must be a live cloud handle.
#[no_mangle]
pub unsafe extern "C" fn ms_cloud_ambient_dim(cloud: *const MsPointCloud) -> usize {
    cloud.as_ref().map_or(0, |c| c.inner.ambient_dim())
}

/// Row-major coordinates, `len * ambient_dim` doubles owned by the handle.
///
/// # Safety
/// `cloud` must be a live cloud handle.
#[no_mangle]
pub unsafe extern "C" fn ms_cloud_coords(cloud: *const MsPointCloud) -> *const f64 {
    cloud.as_ref().map_or(ptr::null(), |c| c.inner.coords().as_ptr())
}

/// # Safety
/// `cloud` must be null or a live cloud handle.
#[no_mangle]
pub unsafe extern "C" fn ms_cloud_free(cloud: *mut MsPointCloud) {
    free(cloud)
}

/// Scattering features of `n_signals` signals stored row-major, each with one
/// value per point of `cloud`.
///
/// # Safety
/// `cfg` and `cloud` must be live handles; `signals` must point to
/// `n_signals * ms_cloud_len(cloud)` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_extract_features(
    cfg: *const MsConfig,
    cloud: *const MsPointCloud,
    signals: *const f64,
    n_signals: usize,
    out: *mut *mut MsFeatures,
) -> MsStatus {
    guard(|| {
        let cfg = &deref(cfg, "config")?.inner;
        let pc = &with_config_dim(cfg, &deref(cloud, "cloud")?.inner)?;
        let n = pc.len();
        let flat = slice(signals, n_signals * n, "signals")?;
        let rows: Vec<Vec<f64>> = flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let backend = cfg.build_backend(pc)?;
        let feats = cfg.extract(&backend, &rows)?;
        let labels = cfg
            .scattering()
            .labels()
            .iter()
            .map(|l| CString::new(l.to_string()).expect("labels have no NUL"))
            .collect::<Vec<_>>();
        let cols = labels.len();
        let values: Vec<f64> = feats.iter().flat_map(|f| f.values.iter().copied()).collect();
        store(out, MsFeatures { rows: feats.len(), cols, values, labels })
    })
}

/// # Safety
/// `f` must be a live features handle.
#[no_mangle]
pub unsafe extern "C" fn ms_features_rows(f: *const MsFeatures) -> usize {
    f.as_ref().map_or(0, |f| f.rows)
}

/// # Safety
/// `f` must be a live features handle.
#[no_mangle]
pub unsafe extern "C" fn ms_features_cols(f: *const MsFeatures) -> usize {
    f.as_ref().map_or(0, |f| f.cols)
}

/// Row-major `rows * cols` values owned by the handle.
///
/// # Safety
/// `f` must be a live features handle.
#[no_mangle]
pub unsafe extern "C" fn ms_features_values(f: *const MsFeatures) -> *const f64 {
    f.as_ref().map_or(ptr::null(), |f| f.values.as_ptr())
}

/// Label of column `col`, e.g. `S(1,3)q2`, or null when out of range.
///
/// # Safety
/// `f` must be a live features handle.
#[no_mangle]
pub unsafe extern "C" fn ms_features_label(f: *const MsFeatures, col: usize) -> *const c_char {
    f.as_ref()
        .and_then(|f| f.labels.get(col))
        .map_or(ptr::null(), |l| l.as_ptr())
}

/// # Safety
/// `f` must be null or a live features handle.
#[no_mangle]
pub unsafe extern "C" fn ms_features_free(f: *mut MsFeatures) {
    free(f)
}

/// The `kappa` smallest eigenpairs of the graph Laplacian of `cloud`, using
/// the kernel, `kappa`, `eps` and `dim` options of `cfg`.
///
/// # Safety
/// `cfg` and `cloud` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ms_laplacian_eigs(
    cfg: *const MsConfig,
    cloud: *const MsPointCloud,
    out: *mut *mut MsEigenpairs,
) -> MsStatus {
    guard(|| {
        let cfg = &deref(cfg, "config")?.inner;
        let pc = &with_config_dim(cfg, &deref(cloud, "cloud")?.inner)?;
        cfg.validate()?;
        let op = cfg.eigenpairs(pc)?;
        let v = op.eigenvectors();
        let (n, kappa) = (v.nrows(), v.ncols());
        let vectors = (0..n).flat_map(|i| (0..kappa).map(move |k| v[(i, k)])).collect();
        store(out, MsEigenpairs { n, kappa, values: op.eigenvalues().to_vec(), vectors })
    })
}

/// # Safety
/// `e` must be a live eigenpairs handle.
#[no_mangle]
pub unsafe extern "C" fn ms_eigs_count(e: *const MsEigenpairs) -> usize {
    e.as_ref().map_or(0, |e| e.kappa)
}

/// Number of points, i.e. the length of each eigenvector.
///
/// # Safety
/// `e` must be a live eigenpairs handle.
#[no_mangle]
pub unsafe extern "C" fn ms_eigs_len(e: *const MsEigenpairs) -> usize {
    e.as_ref().map_or(0, |e| e.n)
}

/// Ascending eigenvalues, `count` doubles owned by the handle.
///
/// # Safety
/// `e` must be a live eigenpairs handle.
#[no_mangle]
pub unsafe extern "C" fn ms_eigs_values(e: *const MsEigenpairs) -> *const f64 {
    e.as_ref().map_or(ptr::null(), |e| e.values.as_ptr())
}

/// Row-major `len * count` eigenvector block; column `k` pairs with eigenvalue `k`.
///
/// # Safety
/// `e` must be a live eigenpairs handle.
#[no_mangle]
pub unsafe extern "C" fn ms_eigs_vectors(e: *const MsEigenpairs) -> *const f64 {
    e.as_ref().map_or(ptr::null(), |e| e.vectors.as_ptr())
}

/// # Safety
/// `e` must be null or a live eigenpairs handle.
#[no_mangle]
pub unsafe extern "C" fn ms_eigs_free(e: *mut MsEigenpairs) {
    free(e)
}
