//! Collision counts and the per-interval uniformity classifiers.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::dist::{l2_norm_sq, ExplicitDistribution};
use crate::error::{Error, Result};
use crate::partition::Interval;

fn frequencies(samples: &[usize]) -> HashMap<usize, u64> {
    let mut m = HashMap::with_capacity(samples.len());
    for &x in samples {
        *m.entry(x).or_insert(0) += 1;
    }
    m
}

/// Number of equal unordered pairs in `samples`.
pub fn pairwise_collisions(samples: &[usize]) -> u64 {
    frequencies(samples).values().map(|&k| k * k.saturating_sub(1) / 2).sum()
}

/// Number of equal pairs `(a, b)` with `a` from `s1` and `b` from `s2`.
pub fn bipartite_collisions(s1: &[usize], s2: &[usize]) -> u64 {
    let f = frequencies(s1);
    s2.iter().map(|x| f.get(x).copied().unwrap_or(0)).sum()
}

/// Collision tallies of one interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionStats {
    pub interval: Interval,
    /// `|S_1|`, zero in pairwise mode.
    pub stored: u64,
    /// `|S_2|` in bipartite mode, `|S_I|` in pairwise mode.
    pub observed: u64,
    pub collisions: u64,
}

impl CollisionStats {
    pub fn pairwise(interval: Interval, samples: &[usize]) -> Self {
        CollisionStats {
            interval,
            stored: 0,
            observed: samples.len() as u64,
            collisions: pairwise_collisions(samples),
        }
    }

    pub fn bipartite(interval: Interval, s1: &[usize], s2: &[usize]) -> Self {
        CollisionStats {
            interval,
            stored: s1.len() as u64,
            observed: s2.len() as u64,
            collisions: bipartite_collisions(s1, s2),
        }
    }

    /// `coll(S) / C(|S|, 2)`, zero with fewer than two samples.
    pub fn pairwise_rate(&self) -> f64 {
        let s = self.observed as f64;
        if self.observed < 2 {
            return 0.0;
        }
        self.collisions as f64 / (s * (s - 1.0) / 2.0)
    }

    /// `coll(S_1, S_2) / (|S_1| |S_2|)`, zero when either side is empty.
    pub fn bipartite_rate(&self) -> f64 {
        if self.stored == 0 || self.observed == 0 {
            return 0.0;
        }
        self.collisions as f64 / (self.stored as f64 * self.observed as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    FarFromUniform,
    NotFlagged,
    Insufficient,
}

/// Which flag threshold the bipartite classifier applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `(1 + eps^2/64) / |I| + eps^2 / 16`
    Monotone,
    /// `(1 + 63 eps^2 / 64) / |I|`
    Decomposable,
}

/// `max(1, ln ln n)`.
pub fn loglog(n: usize) -> f64 {
    let l = (n as f64).ln();
    if l > 1.0 {
        l.ln().max(1.0)
    } else {
        1.0
    }
}

pub fn monotone_flag_threshold(len: usize, eps: f64) -> f64 {
    (1.0 + eps * eps / 64.0) / len as f64 + eps * eps / 16.0
}

pub fn decomposable_flag_threshold(len: usize, eps: f64) -> f64 {
    (1.0 + 63.0 * eps * eps / 64.0) / len as f64
}

/// Pairwise sample gate `c1 sqrt(|I|) loglog(n) / eps^4`.
pub fn pairwise_gate(len: usize, n: usize, eps: f64, c1: f64) -> f64 {
    c1 * (len as f64).sqrt() * loglog(n) / eps.powi(4)
}

/// Bipartite gate: `|S_1| |S_2|` must reach `c2 |S_I| / eps^4`.
pub fn bipartite_gate(s_i: u64, eps: f64, c2: f64) -> f64 {
    c2 * s_i as f64 / eps.powi(4)
}

/// Flags an interval whose pairwise collision rate is too high for a
/// near-uniform conditional.
pub fn classify_pairwise(stats: &CollisionStats, eps: f64, n: usize, c1: f64) -> Classification {
    let len = stats.interval.len();
    if (stats.observed as f64) < pairwise_gate(len, n, eps, c1) || stats.observed < 2 {
        return Classification::Insufficient;
    }
    if stats.pairwise_rate() >= monotone_flag_threshold(len, eps) {
        Classification::FarFromUniform
    } else {
        Classification::NotFlagged
    }
}

/// Bipartite counterpart of [`classify_pairwise`]; `|S_I|` is taken to be
/// `|S_1| + |S_2|`.
pub fn classify_bipartite(
    stats: &CollisionStats,
    eps: f64,
    mode: ThresholdMode,
    c2: f64,
) -> Classification {
    let len = stats.interval.len();
    let product = stats.stored as f64 * stats.observed as f64;
    if product == 0.0 || product < bipartite_gate(stats.stored + stats.observed, eps, c2) {
        return Classification::Insufficient;
    }
    let threshold = match mode {
        ThresholdMode::Monotone => monotone_flag_threshold(len, eps),
        ThresholdMode::Decomposable => decomposable_flag_threshold(len, eps),
    };
    if stats.bipartite_rate() > threshold {
        Classification::FarFromUniform
    } else {
        Classification::NotFlagged
    }
}

/// `max D(i) / min D(i) - 1` over the support; infinite when some point is
/// zero and another is not.
pub fn bias(d: &ExplicitDistribution) -> f64 {
    let max = d.pmf().iter().cloned().fold(0.0, f64::max);
    let min = d.pmf().iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        return if max == 0.0 { 0.0 } else { f64::INFINITY };
    }
    max / min - 1.0
}

/// Fraction of `trials` in which the bipartite estimate of `||D||_2^2` for
/// the conditional `dist` misses by more than `eps^2 / (64 |I|)`.
pub fn bipartite_estimate_error<R: Rng + ?Sized>(
    dist: &ExplicitDistribution,
    s1_size: usize,
    s2_size: usize,
    eps: f64,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    if s1_size == 0 || s2_size == 0 || trials == 0 {
        return Err(Error::InvalidArgument(
            "sample sizes and trial count must be positive".into(),
        ));
    }
    let alias = WeightedAliasIndex::new(dist.pmf().to_vec())
        .map_err(|e| Error::InvalidDistribution(format!("cannot build sampler: {e}")))?;
    let target = l2_norm_sq(dist);
    let tol = eps * eps / (64.0 * dist.n() as f64);
    let iv = Interval::new(1, dist.n());
    let mut misses = 0usize;
    let mut s1 = vec![0usize; s1_size];
    let mut s2 = vec![0usize; s2_size];
    for _ in 0..trials {
        s1.iter_mut().for_each(|x| *x = alias.sample(rng) + 1);
        s2.iter_mut().for_each(|x| *x = alias.sample(rng) + 1);
        let est = CollisionStats::bipartite(iv, &s1, &s2).bipartite_rate();
        if (est - target).abs() > tol {
            misses += 1;
        }
    }
    Ok(misses as f64 / trials as f64)
}
