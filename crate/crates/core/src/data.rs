//! Dataset ingestion, stratified splitting and the synthetic temporal-order task.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::detrng::{SeedPath, StreamState};
use crate::encoding::SpikeRaster;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// File name the digits loader looks for inside a data directory.
pub const DIGITS_FILE: &str = "digits.csv";

const DIGITS_HINT: &str = "The 8x8 optical digits file is a headerless CSV with 64 integer \
intensity columns (0..16) followed by the class label, one sample per line (1797 lines). \
It ships with scikit-learn as sklearn/datasets/data/digits.csv.gz (gunzip it), or can be built \
from the UCI 'Optical Recognition of Handwritten Digits' files optdigits.tra + optdigits.tes. \
Place it in the data directory (--data-dir or SPIKEBENCH_DATA_DIR).";

/// Known data files and their SHA-256 digests.
pub const CHECKSUMS: &[(&str, &str)] =
    &[(DIGITS_FILE, "6ebb3d2fee246a4e99363262ddf8a00a3c41bee6014c373ed9d9216ba7f651b8")];

/// Labeled feature matrix with features in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub features: Matrix<T>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub provenance: String,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(features: Matrix<T>, labels: Vec<usize>, class_count: usize, provenance: impl Into<String>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimensionMismatch { expected: features.rows(), actual: labels.len() });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::LabelOutOfRange { label, classes: class_count });
        }
        if let Some(&x) = features.as_slice().iter().find(|&&x| !(x >= T::zero() && x <= T::one())) {
            return Err(Error::FeatureOutOfRange(x.as_f64()));
        }
        Ok(Self { features, labels, class_count, provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.features.cols()
    }

    pub fn sample(&self, i: usize) -> &[T] {
        self.features.row(i)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Loads the 8×8 optical digits CSV (64 intensities in 0..=16, then the label).
pub fn load_digits<T: Scalar>(path: &Path) -> Result<Dataset<T>> {
    let ds = read_integer_csv(path, 64, 16, DIGITS_HINT)?;
    if ds.class_count != 10 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("expected 10 classes, found {}", ds.class_count),
        });
    }
    Ok(ds)
}

/// Loads a headerless integer CSV with `feature_count` feature columns
/// (each in `0..=max_value`) followed by a label column.
pub fn load_csv_generic<T: Scalar>(path: &Path, feature_count: usize, max_value: u32) -> Result<Dataset<T>> {
    read_integer_csv(
        path,
        feature_count,
        max_value,
        "Expected a headerless CSV: integer feature columns followed by an integer label column.",
    )
}

fn read_integer_csv<T: Scalar>(path: &Path, feature_count: usize, max_value: u32, hint: &str) -> Result<Dataset<T>> {
    if max_value == 0 {
        return Err(Error::InvalidArgument("max_value must be positive".into()));
    }
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingData { path: path.to_path_buf(), hint: hint.to_string() })
        }
        Err(e) => return Err(e.into()),
    };
    let parse_err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let scale = T::of(f64::from(max_value));
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != feature_count + 1 {
            return Err(parse_err(
                line_no,
                format!("expected {} columns ({} features + label), found {}", feature_count + 1, feature_count, cells.len()),
            ));
        }
        for cell in &cells[..feature_count] {
            let v: u32 = cell.parse().map_err(|_| parse_err(line_no, format!("non-integer cell {cell:?}")))?;
            if v > max_value {
                return Err(parse_err(line_no, format!("intensity {v} exceeds maximum {max_value}")));
            }
            data.push(T::of(f64::from(v)) / scale);
        }
        let label: usize = cells[feature_count]
            .parse()
            .map_err(|_| parse_err(line_no, format!("non-integer label {:?}", cells[feature_count])))?;
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(parse_err(0, "no samples".into()));
    }
    let class_count = labels.iter().max().map_or(0, |&m| m + 1);
    let features = Matrix::from_vec(labels.len(), feature_count, data)?;
    Dataset::new(features, labels, class_count, path.display().to_string())
}

fn read_be_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes.get(at..at + 4).map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

/// Parses an IDX file with unsigned-byte payload; returns `(dims, payload)`.
pub fn parse_idx(bytes: &[u8]) -> Result<(Vec<usize>, &[u8])> {
    let bad = |msg: &str| Error::InvalidArgument(format!("IDX: {msg}"));
    if bytes.len() < 4 || bytes[0] != 0 || bytes[1] != 0 {
        return Err(bad("bad magic"));
    }
    if bytes[2] != 0x08 {
        return Err(bad("only unsigned-byte payloads are supported"));
    }
    let ndims = bytes[3] as usize;
    let mut dims = Vec::with_capacity(ndims);
    for d in 0..ndims {
        dims.push(read_be_u32(bytes, 4 + 4 * d).ok_or_else(|| bad("truncated header"))? as usize);
    }
    let start = 4 + 4 * ndims;
    let len: usize = dims.iter().product();
    let payload = bytes.get(start..start + len).ok_or_else(|| bad("truncated payload"))?;
    Ok((dims, payload))
}

/// Loads an IDX image file plus IDX label file (MNIST layout); pixels are divided by 255.
pub fn load_idx<T: Scalar>(images: &Path, labels: &Path) -> Result<Dataset<T>> {
    let read = |p: &Path| {
        fs::read(p).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingData {
                path: p.to_path_buf(),
                hint: "Expected an IDX file (big-endian magic, dimensions, unsigned bytes).".into(),
            },
            _ => e.into(),
        })
    };
    let img_bytes = read(images)?;
    let lbl_bytes = read(labels)?;
    let (img_dims, pixels) = parse_idx(&img_bytes)?;
    let (lbl_dims, lbls) = parse_idx(&lbl_bytes)?;
    if img_dims.is_empty() || lbl_dims.len() != 1 || img_dims[0] != lbl_dims[0] {
        return Err(Error::InvalidArgument("IDX image and label counts differ".into()));
    }
    let n = img_dims[0];
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let per_sample: usize = img_dims[1..].iter().product();
    let data = pixels.iter().map(|&p| T::of(f64::from(p)) / T::of(255.0)).collect();
    let labels: Vec<usize> = lbls.iter().map(|&l| l as usize).collect();
    let class_count = labels.iter().max().map_or(0, |&m| m + 1);
    Dataset::new(Matrix::from_vec(n, per_sample, data)?, labels, class_count, images.display().to_string())
}

/// Hex SHA-256 of a file's contents.
pub fn file_digest(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Checks a file against the registry. `None` when the file name is not registered.
pub fn verify_known_file(path: &Path) -> Result<Option<bool>> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    match CHECKSUMS.iter().find(|(n, _)| *n == name) {
        Some((_, digest)) => Ok(Some(file_digest(path)? == *digest)),
        None => Ok(None),
    }
}

/// Resolves the data directory: explicit value, then `SPIKEBENCH_DATA_DIR`,
/// then a `data/` directory in the current directory or any ancestor of it or of this crate.
pub fn resolve_data_dir(explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os("SPIKEBENCH_DATA_DIR") {
        return PathBuf::from(p);
    }
    let starts = [std::env::current_dir().ok(), Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")))];
    for start in starts.into_iter().flatten() {
        for dir in start.ancestors() {
            let candidate = dir.join("data");
            if candidate.join(DIGITS_FILE).is_file() {
                return candidate;
            }
        }
    }
    PathBuf::from("data")
}

/// Disjoint train / validation / test index lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

const TEST_FRACTION: (usize, usize) = (1, 5);
const VAL_FRACTION: (usize, usize) = (1, 5);
const MIN_CLASS_SIZE: usize = 5;

/// Apportions `ceil(total·num/den)` across groups: per-group floor, then the
/// leftover units to the largest fractional remainders (ties → lowest group).
fn apportion(sizes: &[usize], (num, den): (usize, usize)) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    let target = (total * num).div_ceil(den);
    let mut alloc: Vec<usize> = sizes.iter().map(|&n| n * num / den).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| (sizes[b] * num % den).cmp(&(sizes[a] * num % den)).then(a.cmp(&b)));
    let mut left = target - alloc.iter().sum::<usize>();
    for &g in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if alloc[g] < sizes[g] {
            alloc[g] += 1;
            left -= 1;
        }
    }
    alloc
}

/// Two-stage stratified 64/16/20 split. Depends only on labels and `split_seed`.
pub fn stratified_split(labels: &[usize], class_count: usize, split_seed: u64) -> Result<SplitIndices> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for (i, &l) in labels.iter().enumerate() {
        if l >= class_count {
            return Err(Error::LabelOutOfRange { label: l, classes: class_count });
        }
        by_class[l].push(i);
    }
    for (class, idx) in by_class.iter().enumerate() {
        if idx.len() < MIN_CLASS_SIZE {
            return Err(Error::ClassTooSmall { class, count: idx.len(), min: MIN_CLASS_SIZE });
        }
    }
    for (class, idx) in by_class.iter_mut().enumerate() {
        SeedPath::root("split", split_seed).push("class", class as u64).resolve().shuffle_in_place(idx);
    }
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let n_test = apportion(&sizes, TEST_FRACTION);
    let rest: Vec<usize> = sizes.iter().zip(&n_test).map(|(n, t)| n - t).collect();
    let n_val = apportion(&rest, VAL_FRACTION);

    let mut split = SplitIndices { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for (c, idx) in by_class.iter().enumerate() {
        let (test, rest) = idx.split_at(n_test[c]);
        let (val, train) = rest.split_at(n_val[c]);
        split.test.extend_from_slice(test);
        split.val.extend_from_slice(val);
        split.train.extend_from_slice(train);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Parameters of the synthetic two-class temporal-order task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalConfig {
    /// Total channels; the first half is group A, the second half group B.
    pub channels: usize,
    pub bins: usize,
    pub burst_len: usize,
    pub burst_rate: f64,
    pub background_rate: f64,
    /// Minimum distance between the two burst onsets, in bins.
    pub min_gap: usize,
    pub samples: usize,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        Self { channels: 16, bins: 120, burst_len: 10, burst_rate: 0.6, background_rate: 0.02, min_gap: 15, samples: 1200 }
    }
}

impl TemporalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels < 2 || !self.channels.is_multiple_of(2) {
            return Err(Error::InvalidConfig("temporal channels must be even and >= 2".into()));
        }
        if self.min_gap < self.burst_len || self.min_gap + self.burst_len > self.bins {
            return Err(Error::InvalidConfig("bursts do not fit in the window".into()));
        }
        if !(0.0..=1.0).contains(&self.burst_rate) || !(0.0..=1.0).contains(&self.background_rate) {
            return Err(Error::InvalidProbability(self.burst_rate.max(self.background_rate)));
        }
        Ok(())
    }
}

/// Rasters with class labels; class 0 means group A bursts first.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalDataset {
    pub rasters: Vec<SpikeRaster>,
    pub labels: Vec<usize>,
    /// `(onset_a, onset_b)` per sample.
    pub onsets: Vec<(usize, usize)>,
}

impl TemporalDataset {
    pub const CLASS_COUNT: usize = 2;
}

/// Generates the temporal-order dataset. Both groups burst exactly once per
/// sample, so per-channel counts carry no class information.
pub fn gen_temporal(cfg: &TemporalConfig, stream: &StreamState) -> Result<TemporalDataset> {
    cfg.validate()?;
    let half = cfg.channels / 2;
    let mut out = TemporalDataset {
        rasters: Vec::with_capacity(cfg.samples),
        labels: Vec::with_capacity(cfg.samples),
        onsets: Vec::with_capacity(cfg.samples),
    };
    for i in 0..cfg.samples {
        let mut s = stream.child(i as u64);
        let label = usize::from(s.next_uniform() >= 0.5);
        let first = s.below(cfg.bins - cfg.burst_len - cfg.min_gap + 1);
        let second = first + cfg.min_gap + s.below(cfg.bins - cfg.burst_len - first - cfg.min_gap + 1);
        let (onset_a, onset_b) = if label == 0 { (first, second) } else { (second, first) };
        let mut raster = SpikeRaster::zeros(cfg.channels, cfg.bins);
        for c in 0..cfg.channels {
            let onset = if c < half { onset_a } else { onset_b };
            for t in 0..cfg.bins {
                let p = if (onset..onset + cfg.burst_len).contains(&t) { cfg.burst_rate } else { cfg.background_rate };
                raster.set(c, t, s.next_uniform() < p);
            }
        }
        out.rasters.push(raster);
        out.labels.push(label);
        out.onsets.push((onset_a, onset_b));
    }
    Ok(out)
}
