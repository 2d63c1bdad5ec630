//! Heat-kernel and sliced-Wasserstein comparisons of persistence diagrams.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::topology::PersistenceDiagram;

/// Four-term heat kernel with reflections across the diagonal, prefactor `1/(8 pi sigma)`.
pub fn heat_kernel(d1: &PersistenceDiagram, d2: &PersistenceDiagram, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::arg(format!("heat kernel bandwidth must be > 0, got {sigma}")));
    }
    let scale = 8.0 * sigma;
    let g = |db: f64, dd: f64| (-(db * db + dd * dd) / scale).exp();
    let mut sum = 0.0;
    for p in d1.points() {
        for q in d2.points() {
            // |p̄ - q̄| = |p - q| and |p̄ - q| = |p - q̄|, so the four terms pair up
            sum += 2.0 * (g(p.birth - q.birth, p.death - q.death) - g(p.birth - q.death, p.death - q.birth));
        }
    }
    Ok(sum / (8.0 * PI * sigma))
}

/// Distance induced by the heat kernel in its feature space.
pub fn heat_distance(d1: &PersistenceDiagram, d2: &PersistenceDiagram, sigma: f64) -> Result<f64> {
    let k11 = heat_kernel(d1, d1, sigma)?;
    let k22 = heat_kernel(d2, d2, sigma)?;
    let k12 = heat_kernel(d1, d2, sigma)?;
    Ok((k11 + k22 - 2.0 * k12).max(0.0).sqrt())
}

/// Sliced Wasserstein distance, midpoint rule over `directions` angles in `[0, pi)`.
///
/// Each diagram is augmented with the diagonal projections of the other's
/// points, so both projected multisets have the same size at every angle.
pub fn sliced_wasserstein_distance(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    directions: usize,
    p: f64,
) -> Result<f64> {
    if directions == 0 {
        return Err(Error::arg("sliced Wasserstein needs at least one direction"));
    }
    if !(p >= 1.0) {
        return Err(Error::arg(format!("order p must be >= 1, got {p}")));
    }
    let diag = |b: f64, d: f64| {
        let m = 0.5 * (b + d);
        (m, m)
    };
    let mut left: Vec<(f64, f64)> = d1.points().iter().map(|q| (q.birth, q.death)).collect();
    left.extend(d2.points().iter().map(|q| diag(q.birth, q.death)));
    let mut right: Vec<(f64, f64)> = d2.points().iter().map(|q| (q.birth, q.death)).collect();
    right.extend(d1.points().iter().map(|q| diag(q.birth, q.death)));
    if left.is_empty() {
        return Ok(0.0);
    }

    let mut a = vec![0.0; left.len()];
    let mut b = vec![0.0; right.len()];
    let mut total = 0.0;
    for m in 0..directions {
        let theta = PI * (m as f64 + 0.5) / directions as f64;
        let (s, c) = theta.sin_cos();
        for (dst, &(x, y)) in a.iter_mut().zip(&left) {
            *dst = x * c + y * s;
        }
        for (dst, &(x, y)) in b.iter_mut().zip(&right) {
            *dst = x * c + y * s;
        }
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        total += a.iter().zip(&b).map(|(x, y)| (x - y).abs().powf(p)).sum::<f64>();
    }
    Ok((total / directions as f64).powf(1.0 / p))
}

/// Gaussian kernel on the sliced distance, `exp(-SW_p^p / (2 tau))`.
pub fn sliced_wasserstein_kernel(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    directions: usize,
    p: f64,
    tau: f64,
) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::arg(format!("kernel scale must be > 0, got {tau}")));
    }
    let sw = sliced_wasserstein_distance(d1, d2, directions, p)?;
    Ok((-sw.powf(p) / (2.0 * tau)).exp())
}
