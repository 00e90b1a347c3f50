//! Dataset generation and ingestion: uniform sphere samples, MNIST IDX
//! files, random rotations, digit-to-sphere projection, CSV matrices and the
//! analytic Laplace-Beltrami spectrum of the unit sphere.

use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::files;
use crate::graph::PointCloud;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Grayscale image with intensities in `[0, 1]`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || pixels.len() != rows * cols {
            return Err(Error::Input(format!("{} pixels do not fill a {rows}x{cols} image", pixels.len())));
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Input("pixel intensities must lie in [0, 1]".into()));
        }
        Ok(Self { rows, cols, pixels })
    }

    pub fn from_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(rows, cols, bytes.iter().map(|&b| b as f64 / 255.0).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.cols + col]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }
}

/// Signals over a fixed point cloud, one per row, with integer class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSignals {
    pub signals: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl LabeledSignals {
    pub fn new(signals: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if signals.is_empty() {
            return Err(Error::Input("no signals".into()));
        }
        if signals.len() != labels.len() {
            return Err(Error::Input(format!("{} signals but {} labels", signals.len(), labels.len())));
        }
        Ok(Self { signals, labels })
    }

    pub fn load(signals: &Path, labels: &Path) -> Result<Self> {
        Self::new(load_signals_csv(signals)?, load_labels_csv(labels)?)
    }
}

/// `n` points drawn uniformly from the unit sphere in `R^3` (normalized Gaussians).
pub fn sample_sphere(n: usize, seed: u64) -> Result<PointCloud> {
    sample_sphere_radius(n, 1.0, seed)
}

/// Uniform samples from the sphere of the given radius.
pub fn sample_sphere_radius(n: usize, radius: f64, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::Parameter("need at least one point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(3 * n);
    while coords.len() < 3 * n {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm < 1e-12 {
            continue;
        }
        coords.extend(v.iter().map(|c| radius * c / norm));
    }
    PointCloud::new(coords, 3, 2)
}

/// Uniform random rotation of `R^3` from a normalized Gaussian quaternion.
pub fn random_rotation(seed: u64) -> Matrix3<f64> {
    random_rotation_from(&mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_rotation_from<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    loop {
        let q = Quaternion::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        if q.norm() > 1e-12 {
            return UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
        }
    }
}

/// Projects an image onto a spherical cloud.
///
/// The cloud is rotated by `rotation`; points with `z > cos(pi/4)` form a
/// polar cap whose orthographic footprint `(x, y)` is mapped linearly from
/// `[-sin(pi/4), sin(pi/4)]^2` onto the pixel grid (image row 0 at `+y`).
/// Each cap point takes the intensity of the pixel it falls in; every other
/// point gets 0.
pub fn project_digit(img: &GrayImage, cloud: &PointCloud, rotation: &Matrix3<f64>) -> Result<Vec<f64>> {
    if cloud.ambient_dim() != 3 {
        return Err(Error::Input(format!("projection needs points in R^3, got R^{}", cloud.ambient_dim())));
    }
    let cap = FRAC_PI_4.cos();
    let half = FRAC_PI_4.sin();
    let (rows, cols) = (img.rows() as f64, img.cols() as f64);
    let mut out = Vec::with_capacity(cloud.len());
    for (i, p) in cloud.points().enumerate() {
        let x = Vector3::new(p[0], p[1], p[2]);
        if (x.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::Input(format!("point {i} has norm {} (not on the unit sphere)", x.norm())));
        }
        let y = rotation * x;
        if y.z > cap {
            let col = (((y.x + half) / (2.0 * half)) * cols).floor().clamp(0.0, cols - 1.0) as usize;
            let row = (((half - y.y) / (2.0 * half)) * rows).floor().clamp(0.0, rows - 1.0) as usize;
            out.push(img.get(row, col));
        } else {
            out.push(0.0);
        }
    }
    Ok(out)
}

/// Projects `count` digits drawn without replacement onto `cloud`, each under
/// its own random rotation.
///
/// A single ChaCha8 stream seeded with `seed` first draws the digit indices,
/// then one rotation per digit in draw order.
pub fn mnist_sphere_signals(
    images: &[GrayImage],
    labels: &[u8],
    cloud: &PointCloud,
    count: usize,
    seed: u64,
) -> Result<LabeledSignals> {
    if images.len() != labels.len() {
        return Err(Error::Input(format!("{} images but {} labels", images.len(), labels.len())));
    }
    if count == 0 || count > images.len() {
        return Err(Error::Parameter(format!("count {count} outside 1..={}", images.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, images.len(), count).into_vec();
    let mut signals = Vec::with_capacity(count);
    for &i in &picks {
        let r = random_rotation_from(&mut rng);
        signals.push(project_digit(&images[i], cloud, &r)?);
    }
    LabeledSignals::new(signals, picks.iter().map(|&i| labels[i] as usize).collect())
}

/// Laplace-Beltrami eigenvalues of the unit 2-sphere, `l (l + 1)` with
/// multiplicity `2l + 1`, for `l = 0..=l_max`.
pub fn sphere_spectrum_oracle(l_max: usize) -> Vec<f64> {
    (0..=l_max)
        .flat_map(|l| std::iter::repeat_n((l * (l + 1)) as f64, 2 * l + 1))
        .collect()
}

fn be_u32(bytes: &[u8], offset: usize, origin: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::parse(origin, format!("offset {offset}"), "truncated header"))
}

fn check_magic(bytes: &[u8], expect: u32, origin: &str) -> Result<()> {
    let magic = be_u32(bytes, 0, origin)?;
    if magic != expect {
        return Err(Error::parse(
            origin,
            "offset 0",
            format!("bad magic number 0x{magic:08x}, expected 0x{expect:08x}"),
        ));
    }
    Ok(())
}

fn check_length(bytes: &[u8], expected: usize, origin: &str) -> Result<()> {
    match bytes.len().cmp(&expected) {
        std::cmp::Ordering::Less => Err(Error::parse(
            origin,
            format!("offset {}", bytes.len()),
            format!("file truncated: header promises {expected} bytes"),
        )),
        std::cmp::Ordering::Greater => Err(Error::parse(
            origin,
            format!("offset {expected}"),
            format!("{} trailing bytes after the declared data", bytes.len() - expected),
        )),
        std::cmp::Ordering::Equal => Ok(()),
    }
}

/// Parses an IDX image file (magic `0x00000803`, dims `[count, rows, cols]`).
pub fn parse_idx_images(bytes: &[u8], origin: &str) -> Result<Vec<GrayImage>> {
    check_magic(bytes, IDX_IMAGES_MAGIC, origin)?;
    let count = be_u32(bytes, 4, origin)? as usize;
    let rows = be_u32(bytes, 8, origin)? as usize;
    let cols = be_u32(bytes, 12, origin)? as usize;
    let size = rows
        .checked_mul(cols)
        .and_then(|s| s.checked_mul(count))
        .and_then(|s| s.checked_add(16))
        .ok_or_else(|| Error::parse(origin, "offset 4", "dimensions overflow"))?;
    check_length(bytes, size, origin)?;
    if rows == 0 || cols == 0 {
        return Err(Error::parse(origin, "offset 8", "zero image dimension"));
    }
    bytes[16..]
        .chunks_exact(rows * cols)
        .map(|chunk| GrayImage::from_bytes(rows, cols, chunk))
        .collect()
}

/// Parses an IDX label file (magic `0x00000801`, dims `[count]`), labels 0-9.
pub fn parse_idx_labels(bytes: &[u8], origin: &str) -> Result<Vec<u8>> {
    check_magic(bytes, IDX_LABELS_MAGIC, origin)?;
    let count = be_u32(bytes, 4, origin)? as usize;
    check_length(bytes, count + 8, origin)?;
    let labels = bytes[8..].to_vec();
    if let Some(i) = labels.iter().position(|&l| l > 9) {
        return Err(Error::parse(origin, format!("offset {}", 8 + i), format!("label {} out of range 0-9", labels[i])));
    }
    Ok(labels)
}

/// Loads an MNIST-style image/label pair.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<(Vec<GrayImage>, Vec<u8>)> {
    let images = parse_idx_images(&files::read_bytes(images_path)?, &images_path.display().to_string())?;
    let labels = parse_idx_labels(&files::read_bytes(labels_path)?, &labels_path.display().to_string())?;
    if images.len() != labels.len() {
        return Err(Error::parse(
            labels_path.display().to_string(),
            "offset 4",
            format!("label count {} does not match image count {}", labels.len(), images.len()),
        ));
    }
    Ok((images, labels))
}

/// Parses headerless comma-separated floats; every row must have the same arity.
pub fn parse_matrix_csv(text: &str, origin: &str) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            let msg = match e.kind() {
                csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                    format!("row has {len} fields, expected {expected_len}")
                }
                _ => e.to_string(),
            };
            Error::parse(origin, format!("line {line}"), msg)
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row = rec
            .iter()
            .map(|f| {
                let v: f64 = f
                    .parse()
                    .map_err(|_| Error::parse(origin, format!("line {line}"), format!("not a number: {f:?}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::parse(origin, format!("line {line}"), "non-finite value"))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(origin, "line 1", "no rows"));
    }
    Ok(rows)
}

pub fn format_matrix_csv(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Point cloud CSV: one point per row; the intrinsic dimension is supplied by the caller.
pub fn load_pointcloud_csv(path: &Path, intrinsic_dim: usize) -> Result<PointCloud> {
    let rows = parse_matrix_csv(&files::read_to_string(path)?, &path.display().to_string())?;
    PointCloud::from_rows(&rows, intrinsic_dim)
}

pub fn save_pointcloud_csv(path: &Path, pc: &PointCloud) -> Result<()> {
    let rows: Vec<Vec<f64>> = pc.points().map(<[f64]>::to_vec).collect();
    files::write_atomic(path, format_matrix_csv(&rows).as_bytes())
}

/// Signals CSV: `S` rows by `N` columns.
pub fn load_signals_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    parse_matrix_csv(&files::read_to_string(path)?, &path.display().to_string())
}

pub fn save_signals_csv(path: &Path, signals: &[Vec<f64>]) -> Result<()> {
    files::write_atomic(path, format_matrix_csv(signals).as_bytes())
}

/// One nonnegative integer label per line.
pub fn load_labels_csv(path: &Path) -> Result<Vec<usize>> {
    let origin = path.display().to_string();
    let text = files::read_to_string(path)?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        labels.push(
            t.parse()
                .map_err(|_| Error::parse(&origin, format!("line {}", i + 1), format!("not a class label: {t:?}")))?,
        );
    }
    if labels.is_empty() {
        return Err(Error::parse(origin, "line 1", "no labels"));
    }
    Ok(labels)
}

pub fn save_labels_csv(path: &Path, labels: &[usize]) -> Result<()> {
    let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
    files::write_atomic(path, text.as_bytes())
}
