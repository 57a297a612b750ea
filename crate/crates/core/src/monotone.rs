//! Exact L1 projection onto non-increasing distributions.
//!
//! The problem `min sum_j w_j |c_j - v_j|` over non-increasing `v >= 0` with
//! `sum_j w_j v_j = sum_j w_j c_j` is a linear program. Dualising the mass
//! constraint with multiplier `lambda in [-1, 1]` leaves a separable convex
//! isotonic problem whose block minimisers are weighted quantiles at level
//! `(1 + lambda) / 2`, solved exactly by pool-adjacent-violators. The dual
//! function is concave and piecewise linear, so bisection on the sign of its
//! supergradient converges to the LP optimum.

/// A pooled block: values sorted ascending with their weights.
struct Block {
    items: Vec<(f64, f64)>,
    len: usize,
    weight: f64,
    value: f64,
}

fn lower_quantile(items: &[(f64, f64)], total: f64, tau: f64) -> f64 {
    let target = tau * total;
    let mut acc = 0.0;
    for &(c, w) in items {
        acc += w;
        if acc >= target {
            return c;
        }
    }
    items.last().map_or(0.0, |&(c, _)| c)
}

fn merge_sorted(a: Vec<(f64, f64)>, b: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i].0 <= b[j].0 {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Non-increasing isotonic fit under the asymmetric absolute loss with
/// quantile level `tau`. Returns `(block length, block weight, block value)`.
fn pava_quantile(c: &[f64], w: &[f64], tau: f64) -> Vec<(usize, f64, f64)> {
    let mut stack: Vec<Block> = Vec::with_capacity(c.len());
    for (&ci, &wi) in c.iter().zip(w) {
        stack.push(Block {
            items: vec![(ci, wi)],
            len: 1,
            weight: wi,
            value: ci,
        });
        while stack.len() >= 2 && stack[stack.len() - 2].value < stack[stack.len() - 1].value {
            let top = stack.pop().unwrap();
            let prev = stack.pop().unwrap();
            let weight = prev.weight + top.weight;
            let items = merge_sorted(prev.items, top.items);
            let value = lower_quantile(&items, weight, tau);
            stack.push(Block {
                items,
                len: prev.len + top.len,
                weight,
                value,
            });
        }
    }
    stack.into_iter().map(|b| (b.len, b.weight, b.value)).collect()
}

/// Minimum weighted L1 distance from `c` to a non-increasing non-negative
/// vector of equal weighted mass.
pub(crate) fn l1_to_nonincreasing(c: &[f64], w: &[f64]) -> f64 {
    debug_assert_eq!(c.len(), w.len());
    // Runs of equal values can be pooled without loss: averaging any
    // feasible fit over such a run keeps it feasible and cannot raise the cost.
    let mut cv: Vec<f64> = Vec::with_capacity(c.len());
    let mut wv: Vec<f64> = Vec::with_capacity(w.len());
    for (&ci, &wi) in c.iter().zip(w) {
        if wi <= 0.0 {
            continue;
        }
        match cv.last() {
            Some(&last) if last == ci => *wv.last_mut().unwrap() += wi,
            _ => {
                cv.push(ci);
                wv.push(wi);
            }
        }
    }
    if cv.windows(2).all(|p| p[0] >= p[1]) {
        return 0.0;
    }
    let mass: f64 = cv.iter().zip(&wv).map(|(c, w)| c * w).sum();

    let dual = |lambda: f64| -> (f64, f64) {
        let tau = (1.0 + lambda) / 2.0;
        let blocks = pava_quantile(&cv, &wv, tau);
        let mut fitted_mass = 0.0;
        let mut idx = 0;
        let mut value = lambda * mass;
        for &(len, bw, bv) in &blocks {
            fitted_mass += bw * bv;
            for j in idx..idx + len {
                value += wv[j] * ((cv[j] - bv).abs() - lambda * bv);
            }
            idx += len;
        }
        (value, mass - fitted_mass)
    };

    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut best = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (g, s) = dual(mid);
        best = best.max(g);
        if s > 0.0 {
            lo = mid;
        } else if s < 0.0 {
            hi = mid;
        } else {
            break;
        }
    }
    best.max(0.0)
}
