//! Wasserstein and bottleneck distances between persistence diagrams.
//!
//! Both are solved on the augmented square problem: rows are the points of
//! the first diagram followed by one diagonal slot per point of the second,
//! columns the points of the second followed by one diagonal slot per point of
//! the first. Any point may go to any diagonal slot at its distance to the
//! diagonal, and diagonal slots match each other for free.

use super::assignment::{has_perfect_matching, min_cost_assignment};
use crate::topology::{DiagramPoint, PersistenceDiagram};

fn l2(a: &DiagramPoint, b: &DiagramPoint) -> f64 {
    (a.birth - b.birth).hypot(a.death - b.death)
}

fn linf(a: &DiagramPoint, b: &DiagramPoint) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

/// Euclidean distance to the nearest point of the diagonal.
pub(crate) fn l2_to_diagonal(p: &DiagramPoint) -> f64 {
    (p.death - p.birth) / std::f64::consts::SQRT_2
}

/// Chebyshev distance to the diagonal, `(d - b) / 2`.
fn linf_to_diagonal(p: &DiagramPoint) -> f64 {
    (p.death - p.birth) / 2.0
}

fn augmented_costs(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    pair: impl Fn(&DiagramPoint, &DiagramPoint) -> f64,
    diag: impl Fn(&DiagramPoint) -> f64,
) -> (Vec<f64>, usize) {
    let (a, b) = (d1.points(), d2.points());
    let n = a.len() + b.len();
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = match (i < a.len(), j < b.len()) {
                (true, true) => pair(&a[i], &b[j]),
                (true, false) => diag(&a[i]),
                (false, true) => diag(&b[j]),
                (false, false) => 0.0,
            };
        }
    }
    (cost, n)
}

/// `p`-Wasserstein distance with Euclidean ground cost.
pub fn wasserstein_distance(d1: &PersistenceDiagram, d2: &PersistenceDiagram, p: f64) -> f64 {
    debug_assert!(p >= 1.0);
    let (cost, n) = augmented_costs(d1, d2, |x, y| l2(x, y).powf(p), |x| l2_to_diagonal(x).powf(p));
    let (total, _) = min_cost_assignment(&cost, n);
    total.max(0.0).powf(1.0 / p)
}

/// Bottleneck distance with Chebyshev ground cost.
///
/// The optimum is one of the finitely many pair costs, so a binary search over
/// the sorted candidates with a perfect-matching test is exact.
pub fn bottleneck_distance(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> f64 {
    let (cost, n) = augmented_costs(d1, d2, linf, linf_to_diagonal);
    if n == 0 {
        return 0.0;
    }
    let mut candidates = cost.clone();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let threshold = candidates[mid];
        if has_perfect_matching(n, |i, j| cost[i * n + j] <= threshold) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}
