//! Relative error difference, seed-level bootstrap and the composite score.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng;
use crate::signal::median;

/// `(err_cgalr - err_baseline) / err_cgalr`; negative favors the controller.
pub fn red(err_baseline: f64, err_cgalr: f64) -> Result<f64> {
    for (name, v) in [("baseline error", err_baseline), ("cg_alr error", err_cgalr)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::arg(format!("{name} must be in [0, 1], got {v}")));
        }
    }
    if err_cgalr == 0.0 {
        return Err(Error::UndefinedRatio("cg_alr error is zero".into()));
    }
    Ok((err_cgalr - err_baseline) / err_cgalr)
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RedResult {
    /// Median of the supplied values.
    pub median_red: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_seeds: usize,
    pub resamples: usize,
}

/// Percentile bootstrap CI of the median.
///
/// For each resample, `n` indices are drawn with [`rng::index`] from a generator
/// seeded with `seed`; the CI endpoints are the `(1-level)/2` and `(1+level)/2`
/// linear-interpolation percentiles of the sorted resampled medians.
pub fn bootstrap_median_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> Result<RedResult> {
    if values.is_empty() {
        return Err(Error::arg("bootstrap needs at least one value"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("bootstrap values must be finite"));
    }
    if resamples == 0 {
        return Err(Error::arg("bootstrap needs at least one resample"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::arg(format!("confidence level must be in (0, 1), got {level}")));
    }
    let n = values.len();
    let mut r = rng::seeded(seed);
    let mut sample = vec![0.0; n];
    let mut medians = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for s in sample.iter_mut() {
            *s = values[rng::index(&mut r, n)];
        }
        medians.push(median(&sample));
    }
    medians.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(RedResult {
        median_red: median(values),
        ci_low: percentile(&medians, tail),
        ci_high: percentile(&medians, 1.0 - tail),
        n_seeds: n,
        resamples,
    })
}

/// Metric family: performance counts positively, generalization gap and convergence cost negatively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum MetricGroup {
    #[serde(rename = "P")]
    Performance,
    #[serde(rename = "G")]
    Generalization,
    #[serde(rename = "C")]
    Convergence,
}

impl FromStr for MetricGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "P" | "p" => Ok(MetricGroup::Performance),
            "G" | "g" => Ok(MetricGroup::Generalization),
            "C" | "c" => Ok(MetricGroup::Convergence),
            other => Err(Error::arg(format!("metric group must be P, G or C, got '{other}'"))),
        }
    }
}

impl fmt::Display for MetricGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricGroup::Performance => "P",
            MetricGroup::Generalization => "G",
            MetricGroup::Convergence => "C",
        })
    }
}

/// One metric's mean value for every variant.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricColumn {
    pub name: String,
    pub group: MetricGroup,
    pub values: Vec<f64>,
}

/// Population z-scores; a zero-variance metric standardizes to all zeros.
pub fn z_standardize(values: &[f64]) -> Vec<f64> {
    if values.iter().all(|&v| v == values[0]) {
        return vec![0.0; values.len()];
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if sd == 0.0 {
        vec![0.0; values.len()]
    } else {
        values.iter().map(|v| (v - mean) / sd).collect()
    }
}

/// `sum_P z - sum_G z - sum_C z` per variant.
pub fn composite_score(columns: &[MetricColumn], n_variants: usize) -> Result<Vec<f64>> {
    if n_variants < 2 {
        return Err(Error::arg("composite score needs at least two variants"));
    }
    if columns.is_empty() {
        return Err(Error::arg("composite score needs at least one metric"));
    }
    let mut score = vec![0.0; n_variants];
    for col in columns {
        if col.values.len() != n_variants {
            return Err(Error::arg(format!("metric '{}' has {} values for {n_variants} variants", col.name, col.values.len())));
        }
        if col.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg(format!("metric '{}' has non-finite values", col.name)));
        }
        let sign = if col.group == MetricGroup::Performance { 1.0 } else { -1.0 };
        for (s, z) in score.iter_mut().zip(z_standardize(&col.values)) {
            *s += sign * z;
        }
    }
    Ok(score)
}

/// One observation of a metric, e.g. one seed at one initial rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricObservation {
    pub variant: String,
    pub group: MetricGroup,
    pub metric: String,
    pub value: f64,
}

/// Pool observations into per-variant means (every observation weighted equally).
///
/// Variants and metrics come out in sorted order. Every variant must report every metric.
pub fn pooled_columns(rows: &[MetricObservation]) -> Result<(Vec<String>, Vec<MetricColumn>)> {
    let mut groups: BTreeMap<&str, MetricGroup> = BTreeMap::new();
    let mut sums: BTreeMap<(&str, &str), (f64, usize)> = BTreeMap::new();
    let mut variants: Vec<String> = Vec::new();
    for r in rows {
        if let Some(&g) = groups.get(r.metric.as_str()) {
            if g != r.group {
                return Err(Error::arg(format!("metric '{}' listed under groups {g} and {}", r.metric, r.group)));
            }
        }
        groups.insert(&r.metric, r.group);
        let e = sums.entry((&r.metric, &r.variant)).or_insert((0.0, 0));
        e.0 += r.value;
        e.1 += 1;
        variants.push(r.variant.clone());
    }
    variants.sort();
    variants.dedup();
    let mut columns = Vec::with_capacity(groups.len());
    for (&metric, &group) in &groups {
        let mut values = Vec::with_capacity(variants.len());
        for v in &variants {
            match sums.get(&(metric, v.as_str())) {
                Some(&(s, n)) => values.push(s / n as f64),
                None => return Err(Error::arg(format!("variant '{v}' is missing metric '{metric}'"))),
            }
        }
        columns.push(MetricColumn { name: metric.to_string(), group, values });
    }
    Ok((variants, columns))
}
