//! Reference implementations used as ground truth by the integration tests.
//! Everything here is deliberately naive and shares no code with the crate.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;

/// Half L1 distance, element by element.
pub fn naive_tv(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Equal unordered pairs, by double loop.
pub fn naive_pairwise(s: &[usize]) -> u64 {
    let mut c = 0;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            if s[i] == s[j] {
                c += 1;
            }
        }
    }
    c
}

/// Equal cross pairs, by double loop.
pub fn naive_bipartite(a: &[usize], b: &[usize]) -> u64 {
    let mut c = 0;
    for x in a {
        for y in b {
            if x == y {
                c += 1;
            }
        }
    }
    c
}

pub fn counts(s: &[usize]) -> HashMap<usize, u64> {
    let mut m = HashMap::new();
    for &x in s {
        *m.entry(x).or_insert(0) += 1;
    }
    m
}

/// TV distance to the nearest non-increasing distribution by enumerating
/// the vertices of the projection LP
/// `min sum |p_i - q_i| / 2` s.t. `q` non-increasing, `q >= 0`, `sum q = 1`.
///
/// At an optimal vertex `q` splits into runs of equal values, and each run is
/// pinned by one tight constraint: `q_i = p_i` for some `i` in the run, `q = 0`
/// (last run only) or the mass constraint (at most one run). Exponential in
/// `n`; meant for `n <= 10`.
pub fn vertex_distance_to_monotone(p: &[f64]) -> f64 {
    let n = p.len();
    assert!((1..=12).contains(&n));
    let mut best = f64::INFINITY;
    // Bit i of `cuts` set: a run ends after position i.
    for cuts in 0u32..(1 << (n - 1)) {
        let mut runs = Vec::new();
        let mut lo = 0;
        for i in 0..n {
            if i == n - 1 || cuts & (1 << i) != 0 {
                runs.push((lo, i + 1));
                lo = i + 1;
            }
        }
        let mut choice = vec![0usize; runs.len()];
        search(p, &runs, 0, &mut choice, &mut best);
    }
    best
}

// Choice per run: 0 = zero, 1 = free, k + 2 = value of p at run start + k.
fn search(p: &[f64], runs: &[(usize, usize)], at: usize, choice: &mut Vec<usize>, best: &mut f64) {
    if at == runs.len() {
        evaluate(p, runs, choice, best);
        return;
    }
    let (lo, hi) = runs[at];
    let last = at + 1 == runs.len();
    for c in 0..(hi - lo + 2) {
        if c == 0 && !last {
            continue;
        }
        if c == 1 && choice[..at].contains(&1) {
            continue;
        }
        choice[at] = c;
        search(p, runs, at + 1, choice, best);
    }
}

fn evaluate(p: &[f64], runs: &[(usize, usize)], choice: &[usize], best: &mut f64) {
    let mut vals = vec![0.0; runs.len()];
    let mut fixed = 0.0;
    let mut free = None;
    for (j, (&(lo, hi), &c)) in runs.iter().zip(choice).enumerate() {
        match c {
            0 => vals[j] = 0.0,
            1 => free = Some(j),
            k => vals[j] = p[lo + k - 2],
        }
        if c != 1 {
            fixed += vals[j] * (hi - lo) as f64;
        }
    }
    match free {
        Some(j) => {
            let (lo, hi) = runs[j];
            vals[j] = (1.0 - fixed) / (hi - lo) as f64;
        }
        None if (fixed - 1.0).abs() > 1e-12 => return,
        None => {}
    }
    if vals.iter().any(|&v| v < -1e-15) || vals.windows(2).any(|w| w[1] > w[0] + 1e-15) {
        return;
    }
    let mut l1 = 0.0;
    for (&(lo, hi), &v) in runs.iter().zip(&vals) {
        l1 += p[lo..hi].iter().map(|x| (x - v).abs()).sum::<f64>();
    }
    *best = best.min(0.5 * l1);
}

/// All integer vectors of length `n` that are non-increasing, non-negative
/// and sum to `total`.
pub fn monotone_compositions(n: usize, total: u32) -> Vec<Vec<u32>> {
    fn rec(left: usize, remaining: u32, cap: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        // The remaining slots can hold at most left * v.
        let lo = (remaining + left as u32 - 1) / left as u32;
        for v in lo..=cap.min(remaining) {
            cur.push(v);
            rec(left - 1, remaining - v, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, total, total, &mut Vec::new(), &mut out);
    out
}

/// All integer vectors of length `n` with non-negative entries summing to
/// `total` (every point of the simplex grid with step 1/total).
pub fn simplex_grid(n: usize, total: u32) -> Vec<Vec<u32>> {
    fn rec(left: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 1 {
            cur.push(remaining);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=remaining {
            cur.push(v);
            rec(left - 1, remaining - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, total, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive minimum of half L1 distance from `p` (integer weights over
/// `scale`) to the monotone grid `grid` (integer weights over the same scale).
pub fn grid_min_distance(p: &[u32], grid: &[Vec<u32>], scale: u32) -> f64 {
    let best = grid
        .iter()
        .map(|q| p.iter().zip(q).map(|(&a, &b)| (a as i64 - b as i64).unsigned_abs()).sum::<u64>())
        .min()
        .expect("non-empty grid");
    best as f64 / (2.0 * scale as f64)
}

/// Same minimum by dynamic programming over the grid, for grids too large to
/// list: `g[i][v][s]` is the least cost of positions `i..n` given every value
/// is at most `v` and they sum to `s`.
pub fn grid_min_distance_dp(p: &[u32], scale: u32) -> f64 {
    let n = p.len();
    let w = scale as usize + 1;
    const INF: u64 = u64::MAX / 4;
    // next[v * w + s] for position i + 1.
    let mut next = vec![INF; w * w];
    for v in 0..w {
        next[v * w] = 0;
    }
    for i in (0..n).rev() {
        let mut cur = vec![INF; w * w];
        for v in 0..w {
            for s in 0..w {
                let mut best = if v > 0 { cur[(v - 1) * w + s] } else { INF };
                if s >= v {
                    let rest = next[v * w + s - v];
                    if rest < INF {
                        let c = (p[i] as i64 - v as i64).unsigned_abs() + rest;
                        best = best.min(c);
                    }
                }
                cur[v * w + s] = best;
            }
        }
        next = cur;
    }
    next[(w - 1) * w + scale as usize] as f64 / (2.0 * scale as f64)
}

/// Random non-increasing pmf of length `n` from one of a few shapes.
pub fn random_monotone<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = match rng.random_range(0..4) {
        0 => (0..n).map(|_| rng.random::<f64>()).collect(),
        1 => {
            let r: f64 = rng.random_range(0.99..1.0);
            (0..n).map(|i| r.powi(i as i32)).collect()
        }
        2 => {
            let a: f64 = rng.random_range(0.0..2.0);
            (1..=n).map(|i| (i as f64).powf(-a)).collect()
        }
        _ => {
            // Random staircase.
            let steps = rng.random_range(1..10usize);
            let mut cuts: Vec<usize> = (0..steps).map(|_| rng.random_range(0..n)).collect();
            cuts.sort_unstable();
            (0..n)
                .map(|i| cuts.iter().filter(|&&c| c >= i).count() as f64 + 1e-3)
                .collect()
        }
    };
    w.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let total: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.into_iter().map(|x| x / total).collect();
    for i in 1..n {
        if p[i] > p[i - 1] {
            p[i] = p[i - 1];
        }
    }
    p
}

/// Independent Birgé sizes: `max(1, floor((1 + eps)^j))`, `j >= 1`, last
/// one cut at `n`.
pub fn birge_sizes(n: usize, eps: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut left = n;
    let mut j = 1;
    while left > 0 {
        let s = ((1.0 + eps).powi(j).floor() as usize).max(1).min(left);
        out.push(s);
        left -= s;
        j += 1;
    }
    out
}

/// Flattening by sizes: mass averaged over each run of `sizes`.
pub fn naive_flatten(p: &[f64], sizes: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.len());
    let mut at = 0;
    for &s in sizes {
        let m: f64 = p[at..at + s].iter().sum();
        out.extend(std::iter::repeat(m / s as f64).take(s));
        at += s;
    }
    out
}
