//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use ndarray::Array2;

/// xoshiro256++ seeded by four SplitMix64 outputs, written from the published algorithm.
pub struct RefRng {
    s: [u64; 4],
}

impl RefRng {
    pub fn new(seed: u64) -> Self {
        let mut x = seed;
        let mut s = [0u64; 4];
        for slot in &mut s {
            x = x.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = x;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            *slot = z ^ (z >> 31);
        }
        Self { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let out = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        out
    }

    pub fn index(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

pub fn sorted_median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

pub fn sorted_mad(v: &[f64]) -> f64 {
    let m = sorted_median(v);
    sorted_median(&v.iter().map(|x| (x - m).abs()).collect::<Vec<_>>())
}

/// Random symmetric weights in `[0, 1]`; about half the instances are quantized to force ties.
pub fn random_weights(rng: &mut RefRng, p: usize) -> Array2<f64> {
    let quantize = rng.index(2) == 0;
    let mut w = Array2::zeros((p, p));
    for i in 0..p {
        for j in i + 1..p {
            let mut v = rng.unit();
            if quantize {
                v = (v * 5.0).floor() / 5.0;
            }
            w[[i, j]] = v;
            w[[j, i]] = v;
        }
    }
    w
}

/// H1 of the Vietoris-Rips filtration of `d` via a dense, unoptimized boundary-matrix reduction.
///
/// Returns the finite pairs with positive persistence, sorted.
pub fn brute_force_h1(d: &Array2<f64>) -> Vec<(f64, f64)> {
    let n = d.nrows();
    let mut simplices: Vec<(f64, Vec<usize>)> = (0..n).map(|v| (0.0, vec![v])).collect();
    for i in 0..n {
        for j in i + 1..n {
            simplices.push((d[[i, j]], vec![i, j]));
            for k in j + 1..n {
                simplices.push((d[[i, j]].max(d[[i, k]]).max(d[[j, k]]), vec![i, j, k]));
            }
        }
    }
    // value first, then dimension: every face precedes its cofaces
    simplices.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.len().cmp(&b.1.len())).then(a.1.cmp(&b.1)));
    let m = simplices.len();
    let position = |verts: &[usize]| simplices.iter().position(|s| s.1 == verts).unwrap();
    let mut cols: Vec<Vec<bool>> = vec![vec![false; m]; m];
    for (c, (_, verts)) in simplices.iter().enumerate() {
        if verts.len() > 1 {
            for drop in 0..verts.len() {
                let face: Vec<usize> = verts.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &v)| v).collect();
                cols[c][position(&face)] = true;
            }
        }
    }
    let low = |col: &Vec<bool>| col.iter().rposition(|&b| b);
    for j in 0..m {
        loop {
            let Some(l) = low(&cols[j]) else { break };
            let Some(k) = (0..j).find(|&k| low(&cols[k]) == Some(l)) else { break };
            let other = cols[k].clone();
            for (a, b) in cols[j].iter_mut().zip(other) {
                *a ^= b;
            }
        }
    }
    let mut pairs = Vec::new();
    for j in 0..m {
        if let Some(i) = low(&cols[j]) {
            if simplices[i].1.len() == 2 {
                let (b, dth) = (simplices[i].0, simplices[j].0);
                if dth > b {
                    pairs.push((b, dth));
                }
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs
}

fn for_each_partial_matching(n: usize, m: usize, f: &mut dyn FnMut(&[Option<usize>])) {
    fn rec(i: usize, n: usize, m: usize, used: &mut Vec<bool>, cur: &mut Vec<Option<usize>>, f: &mut dyn FnMut(&[Option<usize>])) {
        if i == n {
            f(cur);
            return;
        }
        cur.push(None);
        rec(i + 1, n, m, used, cur, f);
        cur.pop();
        for j in 0..m {
            if !used[j] {
                used[j] = true;
                cur.push(Some(j));
                rec(i + 1, n, m, used, cur, f);
                cur.pop();
                used[j] = false;
            }
        }
    }
    rec(0, n, m, &mut vec![false; m], &mut Vec::new(), f);
}

/// p-Wasserstein with Euclidean ground metric by enumerating every partial matching.
pub fn enumerate_wasserstein(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> f64 {
    let diag = |x: &(f64, f64)| (x.1 - x.0) / 2f64.sqrt();
    let mut best = f64::INFINITY;
    for_each_partial_matching(a.len(), b.len(), &mut |assign| {
        let mut used = vec![false; b.len()];
        let mut total = 0.0;
        for (i, t) in assign.iter().enumerate() {
            match t {
                Some(j) => {
                    used[*j] = true;
                    total += ((a[i].0 - b[*j].0).powi(2) + (a[i].1 - b[*j].1).powi(2)).sqrt().powf(p);
                }
                None => total += diag(&a[i]).powf(p),
            }
        }
        for (j, u) in used.iter().enumerate() {
            if !u {
                total += diag(&b[j]).powf(p);
            }
        }
        best = best.min(total);
    });
    best.powf(1.0 / p)
}

/// Bottleneck distance with sup-norm ground metric by enumerating every partial matching.
pub fn enumerate_bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let diag = |x: &(f64, f64)| (x.1 - x.0) / 2.0;
    let mut best = f64::INFINITY;
    for_each_partial_matching(a.len(), b.len(), &mut |assign| {
        let mut used = vec![false; b.len()];
        let mut worst: f64 = 0.0;
        for (i, t) in assign.iter().enumerate() {
            match t {
                Some(j) => {
                    used[*j] = true;
                    worst = worst.max((a[i].0 - b[*j].0).abs().max((a[i].1 - b[*j].1).abs()));
                }
                None => worst = worst.max(diag(&a[i])),
            }
        }
        for (j, u) in used.iter().enumerate() {
            if !u {
                worst = worst.max(diag(&b[j]));
            }
        }
        best = best.min(worst);
    });
    best
}

/// Up to `max_points` random points with `0 <= birth < death <= 1`.
pub fn random_diagram(rng: &mut RefRng, max_points: usize) -> Vec<(f64, f64)> {
    let k = rng.index(max_points + 1);
    (0..k)
        .map(|_| {
            let b = rng.unit() * 0.9;
            (b, b + 0.01 + rng.unit() * (1.0 - b - 0.01))
        })
        .collect()
}
