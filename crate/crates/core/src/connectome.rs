//! Activation capture and functional connectome construction.
//!
//! A connectome is the matrix of absolute Pearson correlations between the
//! activation profiles of `P` signals over a probe set of `N` samples.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::rng;

/// `N x P` matrix of activations: one row per probe sample, one column per signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationMatrix {
    values: Array2<f64>,
    sample_ids: Vec<usize>,
}

impl ActivationMatrix {
    pub fn new(values: Array2<f64>, sample_ids: Vec<usize>) -> Result<Self> {
        let (n, p) = values.dim();
        if n < 2 {
            return Err(Error::arg(format!("activation matrix needs at least 2 rows, got {n}")));
        }
        if p < 2 {
            return Err(Error::arg(format!("activation matrix needs at least 2 columns, got {p}")));
        }
        if sample_ids.len() != n {
            return Err(Error::arg(format!(
                "{} sample ids for {n} rows",
                sample_ids.len()
            )));
        }
        if let Some(((i, j), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::data(format!("non-finite activation {v} at ({i}, {j})")));
        }
        Ok(Self { values, sample_ids })
    }

    /// Build from rows with sample ids `0..N`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::arg("ragged activation rows"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((n, p), flat).map_err(|e| Error::arg(e.to_string()))?;
        Self::new(values, (0..n).collect())
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn sample_ids(&self) -> &[usize] {
        &self.sample_ids
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_signals(&self) -> usize {
        self.values.ncols()
    }
}

/// Symmetric `P x P` matrix of weights in `[0, 1]` with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Connectome {
    weights: Array2<f64>,
}

impl Connectome {
    /// Validate and wrap an explicit weight matrix.
    pub fn from_weights(weights: Array2<f64>) -> Result<Self> {
        let (r, c) = weights.dim();
        if r != c {
            return Err(Error::arg(format!("connectome must be square, got {r}x{c}")));
        }
        if r < 2 {
            return Err(Error::arg("connectome needs at least 2 signals"));
        }
        for i in 0..r {
            if weights[[i, i]] != 0.0 {
                return Err(Error::data(format!("nonzero diagonal at {i}")));
            }
            for j in 0..r {
                let w = weights[[i, j]];
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::data(format!("weight {w} at ({i}, {j}) outside [0, 1]")));
                }
                if w != weights[[j, i]] {
                    return Err(Error::data(format!("asymmetric weights at ({i}, {j})")));
                }
            }
        }
        Ok(Self { weights })
    }

    pub fn size(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[[i, j]]
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        self.weights.view()
    }

    /// `1 - M` with a zero diagonal, the filtration input for Rips persistence.
    pub fn dissimilarity(&self) -> Array2<f64> {
        let p = self.size();
        Array2::from_shape_fn((p, p), |(i, j)| if i == j { 0.0 } else { 1.0 - self.weights[[i, j]] })
    }

    /// P rows of P comma-separated values.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for row in self.weights.rows() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|e| Error::Parse {
                        location: format!("line {}", lineno + 1),
                        message: e.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let p = rows.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::data("connectome CSV is not square"));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let weights = Array2::from_shape_vec((p, p), flat).map_err(|e| Error::data(e.to_string()))?;
        Self::from_weights(weights)
    }
}

/// Absolute Pearson correlation between every pair of columns.
///
/// Pairs involving a constant column get weight 0. Each unordered pair is
/// computed once and mirrored, so the result is bitwise symmetric.
pub fn correlation_connectome(a: &ActivationMatrix) -> Connectome {
    let values = a.values();
    let (n, p) = values.dim();

    // Two-pass: column means, then centered columns and their sums of squares.
    let mut centered = Array2::<f64>::zeros((p, n));
    let mut sum_sq = vec![0.0; p];
    let mut constant = vec![false; p];
    for j in 0..p {
        let col = values.column(j);
        let first = col[0];
        constant[j] = col.iter().all(|&v| v == first);
        let mean = col.sum() / n as f64;
        let mut ss = 0.0;
        for (dst, &v) in centered.row_mut(j).iter_mut().zip(col.iter()) {
            *dst = v - mean;
            ss += *dst * *dst;
        }
        sum_sq[j] = ss;
    }

    let mut weights = Array2::<f64>::zeros((p, p));
    for i in 0..p {
        for j in (i + 1)..p {
            let w = if constant[i] || constant[j] || sum_sq[i] == 0.0 || sum_sq[j] == 0.0 {
                0.0
            } else {
                let cov: f64 = centered.row(i).dot(&centered.row(j));
                (cov / (sum_sq[i] * sum_sq[j]).sqrt()).abs().min(1.0)
            };
            weights[[i, j]] = w;
            weights[[j, i]] = w;
        }
    }
    Connectome { weights }
}

/// How a spatial activation map collapses to one scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reducer {
    Mean,
    Max,
    GlobalNorm,
}

impl std::str::FromStr for Reducer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Reducer::Mean),
            "max" => Ok(Reducer::Max),
            "global-norm" | "norm" => Ok(Reducer::GlobalNorm),
            other => Err(Error::arg(format!("unknown reducer '{other}'"))),
        }
    }
}

impl Reducer {
    fn apply(self, map: &Array2<f64>) -> f64 {
        match self {
            Reducer::Mean => map.sum() / map.len() as f64,
            Reducer::Max => map.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Reducer::GlobalNorm => map.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }
}

/// Collapse per-sample, per-channel spatial maps into an activation matrix.
///
/// `maps[sample][channel]` is an `H x W` map; every sample must carry the same
/// channels with the same spatial shape per channel.
pub fn reduce_feature_maps(maps: &[Vec<Array2<f64>>], reducer: Reducer) -> Result<ActivationMatrix> {
    let first = maps.first().ok_or_else(|| Error::arg("no samples"))?;
    let channels = first.len();
    let shapes: Vec<(usize, usize)> = first.iter().map(Array2::dim).collect();
    let mut values = Array2::<f64>::zeros((maps.len(), channels));
    for (s, sample) in maps.iter().enumerate() {
        if sample.len() != channels {
            return Err(Error::arg(format!(
                "sample {s} has {} channels, expected {channels}",
                sample.len()
            )));
        }
        for (c, map) in sample.iter().enumerate() {
            if map.is_empty() {
                return Err(Error::arg(format!("empty map at sample {s}, channel {c}")));
            }
            if map.dim() != shapes[c] {
                return Err(Error::arg(format!(
                    "map at sample {s}, channel {c} has shape {:?}, expected {:?}",
                    map.dim(),
                    shapes[c]
                )));
            }
            values[[s, c]] = reducer.apply(map);
        }
    }
    ActivationMatrix::new(values, (0..maps.len()).collect())
}

/// Fixed stratified subset of training samples used for every capture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeSet {
    pub indices: Vec<usize>,
    pub per_class_counts: BTreeMap<usize, usize>,
}

impl ProbeSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Stratified, seeded probe selection.
///
/// Class quotas are `size * freq` rounded by the largest-remainder rule (ties
/// go to the smaller label). Within a class, a seeded shuffle of its indices
/// picks the members. Returned indices are ascending.
pub fn build_probe_set(labels: &[usize], size: usize, seed: u64) -> Result<ProbeSet> {
    if labels.is_empty() {
        return Err(Error::arg("labels are empty"));
    }
    if size == 0 {
        return Err(Error::arg("probe size must be at least 1"));
    }

    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }

    let total = labels.len();
    if size >= total {
        let per_class_counts = by_class.iter().map(|(&c, v)| (c, v.len())).collect();
        return Ok(ProbeSet { indices: (0..total).collect(), per_class_counts });
    }

    // floor quotas, then hand out the residual by largest remainder
    let mut quotas: Vec<(usize, usize, u128)> = by_class
        .iter()
        .map(|(&c, members)| {
            let scaled = size as u128 * members.len() as u128;
            let q = (scaled / total as u128) as usize;
            let rem = scaled % total as u128;
            (c, q, rem)
        })
        .collect();
    let assigned: usize = quotas.iter().map(|q| q.1).sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| quotas[b].2.cmp(&quotas[a].2).then(quotas[a].0.cmp(&quotas[b].0)));
    for &k in order.iter().take(size - assigned) {
        quotas[k].1 += 1;
    }

    let mut rng = rng::seeded(seed);
    let mut indices = Vec::with_capacity(size);
    let mut per_class_counts = BTreeMap::new();
    for (class, quota, _) in quotas {
        let mut members = by_class[&class].clone();
        rng::shuffle(&mut rng, &mut members);
        indices.extend_from_slice(&members[..quota]);
        per_class_counts.insert(class, quota);
    }
    indices.sort_unstable();
    Ok(ProbeSet { indices, per_class_counts })
}
