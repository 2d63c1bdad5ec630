//! Seeded synthetic datasets, a CSV loader and the train/validation/test split.

use std::io::BufRead;
use std::path::Path;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};

/// Labelled samples, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::arg(format!("{} feature rows but {} labels", features.nrows(), labels.len())));
        }
        if features.is_empty() {
            return Err(Error::data("dataset is empty"));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("dataset contains non-finite features"));
        }
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        if n_classes < 2 {
            return Err(Error::data("dataset needs at least two classes"));
        }
        Ok(Self { features, labels, n_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Rows `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }
}

fn build(rows: Vec<[f64; 2]>, labels: Vec<usize>) -> Result<Dataset> {
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Dataset::new(Array2::from_shape_vec((rows.len(), 2), flat).expect("row width 2"), labels)
}

/// Two interleaved half circles. Sample `i` belongs to class `i % 2`.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::arg("two_moons needs at least 4 samples"));
    }
    let mut r = rng::seeded(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let t = std::f64::consts::PI * rng::unit_f64(&mut r);
        let (x, y) = if class == 0 { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
        rows.push([x + noise * rng::normal(&mut r), y + noise * rng::normal(&mut r)]);
        labels.push(class);
    }
    build(rows, labels)
}

/// Concentric circles of radius 1 (class 0) and 0.5 (class 1).
pub fn rings(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::arg("rings needs at least 4 samples"));
    }
    let mut r = rng::seeded(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let radius = if class == 0 { 1.0 } else { 0.5 };
        let t = 2.0 * std::f64::consts::PI * rng::unit_f64(&mut r);
        rows.push([radius * t.cos() + noise * rng::normal(&mut r), radius * t.sin() + noise * rng::normal(&mut r)]);
        labels.push(class);
    }
    build(rows, labels)
}

/// Isotropic Gaussian blobs with centers evenly spaced on a circle of radius 3.
pub fn blobs(n: usize, classes: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if classes < 2 || n < 2 * classes {
        return Err(Error::arg(format!("blobs needs >= 2 classes and >= 2 samples per class, got n={n}, classes={classes}")));
    }
    let mut r = rng::seeded(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % classes;
        let angle = 2.0 * std::f64::consts::PI * class as f64 / classes as f64;
        rows.push([
            3.0 * angle.cos() + spread * rng::normal(&mut r),
            3.0 * angle.sin() + spread * rng::normal(&mut r),
        ]);
        labels.push(class);
    }
    build(rows, labels)
}

/// Rows of comma-separated numbers; the last column is a nonnegative integer label.
///
/// Blank lines and lines starting with `#` are skipped, as is a first line that
/// does not parse as numbers.
pub fn read_csv<R: BufRead>(input: R) -> Result<Dataset> {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    let mut seen_first = false;
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let first = !seen_first;
        seen_first = true;
        let row = match parsed {
            Ok(row) => row,
            Err(_) if first => continue,
            Err(e) => return Err(Error::Parse { location: format!("line {}", lineno + 1), message: e.to_string() }),
        };
        if row.len() < 2 {
            return Err(Error::Parse { location: format!("line {}", lineno + 1), message: "need features and a label".into() });
        }
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(Error::Parse {
                location: format!("line {}", lineno + 1),
                message: format!("expected {} columns, found {}", width.unwrap(), row.len()),
            });
        }
        let label = row[row.len() - 1];
        if !(label >= 0.0 && label.fract() == 0.0) {
            return Err(Error::Parse { location: format!("line {}", lineno + 1), message: format!("label {label} is not a nonnegative integer") });
        }
        labels.push(label as usize);
        values.extend_from_slice(&row[..row.len() - 1]);
    }
    let cols = width.ok_or_else(|| Error::data("CSV dataset has no rows"))? - 1;
    Dataset::new(Array2::from_shape_vec((labels.len(), cols), values).expect("rectangular"), labels)
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Disjoint train/validation/test partitions.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// Shuffle with `seed`, then cut 70/15/15 (validation and test get `floor(0.15 n)` each).
pub fn split(data: &Dataset, seed: u64) -> Result<Split> {
    let n = data.len();
    let n_val = n * 15 / 100;
    let n_train = n - 2 * n_val;
    if n_val == 0 {
        return Err(Error::arg(format!("{n} samples are too few to split")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut r: SeededRng = rng::seeded(seed);
    rng::shuffle(&mut r, &mut order);
    Ok(Split {
        train: data.subset(&order[..n_train]),
        val: data.subset(&order[n_train..n_train + n_val]),
        test: data.subset(&order[n_train + n_val..]),
    })
}
