//! Square assignment solvers over dense cost matrices.

use std::collections::VecDeque;

/// Minimum-cost perfect assignment on an `n x n` row-major cost matrix.
///
/// Shortest-augmenting-path Hungarian method with row/column potentials,
/// `O(n^3)`. Returns the total cost and `row -> column`.
pub fn min_cost_assignment(cost: &[f64], n: usize) -> (f64, Vec<usize>) {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    if n == 0 {
        return (0.0, Vec::new());
    }
    let at = |i: usize, j: usize| cost[(i - 1) * n + (j - 1)];

    // 1-based; row 0 / column 0 are the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = at(i0, j) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[col_owner[j] - 1] = j - 1;
    }
    // sum the original entries rather than trusting the potentials
    let total = assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    (total, assignment)
}

/// Whether the bipartite graph `rows x cols` (both of size `n`) with edges
/// `allowed(i, j)` has a perfect matching. Hopcroft-Karp.
pub fn has_perfect_matching(n: usize, allowed: impl Fn(usize, usize) -> bool) -> bool {
    let adj: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| allowed(i, j)).collect()).collect();
    if adj.iter().any(Vec::is_empty) {
        return false;
    }
    const FREE: usize = usize::MAX;
    let mut match_row = vec![FREE; n];
    let mut match_col = vec![FREE; n];
    let mut dist = vec![0usize; n];
    let mut matched = 0;

    loop {
        // BFS layering from free rows
        let mut queue = VecDeque::new();
        for i in 0..n {
            if match_row[i] == FREE {
                dist[i] = 0;
                queue.push_back(i);
            } else {
                dist[i] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                let k = match_col[j];
                if k == FREE {
                    found = true;
                } else if dist[k] == usize::MAX {
                    dist[k] = dist[i] + 1;
                    queue.push_back(k);
                }
            }
        }
        if !found {
            break;
        }

        fn augment(
            i: usize,
            adj: &[Vec<usize>],
            match_row: &mut [usize],
            match_col: &mut [usize],
            dist: &mut [usize],
        ) -> bool {
            for &j in &adj[i] {
                let k = match_col[j];
                if k == usize::MAX || (dist[k] == dist[i] + 1 && augment(k, adj, match_row, match_col, dist)) {
                    match_row[i] = j;
                    match_col[j] = i;
                    return true;
                }
            }
            dist[i] = usize::MAX;
            false
        }

        for i in 0..n {
            if match_row[i] == FREE && augment(i, &adj, &mut match_row, &mut match_col, &mut dist) {
                matched += 1;
            }
        }
    }
    matched == n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(cost: &[f64], n: usize) -> f64 {
        fn rec(cost: &[f64], n: usize, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(cost, n, row + 1, used, acc + cost[row * n + j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, n, 0, &mut vec![false; n], 0.0, &mut best);
        best
    }

    #[test]
    fn small_known_instance() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let (total, a) = min_cost_assignment(&cost, 3);
        assert_eq!(total, 5.0);
        assert_eq!(a, vec![1, 0, 2]);
    }

    #[test]
    fn matches_enumeration_on_pseudo_random_matrices() {
        let mut rng = crate::rng::seeded(99);
        for n in 1..=6 {
            for _ in 0..30 {
                let cost: Vec<f64> = (0..n * n).map(|_| crate::rng::unit_f64(&mut rng)).collect();
                let (total, a) = min_cost_assignment(&cost, n);
                let mut cols = a.clone();
                cols.sort();
                assert_eq!(cols, (0..n).collect::<Vec<_>>());
                assert!((total - brute_force(&cost, n)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perfect_matching_detection() {
        assert!(has_perfect_matching(3, |i, j| i == j || j == (i + 1) % 3));
        assert!(!has_perfect_matching(3, |_, j| j == 0 || j == 1));
        assert!(has_perfect_matching(0, |_, _| false));
    }
}
