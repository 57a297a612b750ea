//! Explicit distributions over `[n]`, distances, flatten/reduce transforms
//! and synthetic instance generators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monotone::l1_to_nonincreasing;
use crate::partition::{birge_partition, Interval, IntervalPartition};

/// Drift from total mass 1 that constructors silently renormalize away.
pub const MASS_TOLERANCE: f64 = 1e-9;

fn validate_weights(pmf: &mut [f64], what: &str) -> Result<()> {
    if pmf.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what} has no entries")));
    }
    if let Some((i, &p)) = pmf.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "{what} entry {} is {p}",
            i + 1
        )));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "{what} sums to {total}, not 1"
        )));
    }
    if total != 1.0 {
        for p in pmf.iter_mut() {
            *p /= total;
        }
    }
    Ok(())
}

/// A probability mass function over `{1, ..., n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfFile", into = "PmfFile")]
pub struct ExplicitDistribution {
    pmf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PmfFile {
    n: usize,
    pmf: Vec<f64>,
}

impl TryFrom<PmfFile> for ExplicitDistribution {
    type Error = Error;

    fn try_from(f: PmfFile) -> Result<Self> {
        if f.n != f.pmf.len() {
            return Err(Error::DimensionMismatch {
                left: f.n,
                right: f.pmf.len(),
            });
        }
        ExplicitDistribution::new(f.pmf)
    }
}

impl From<ExplicitDistribution> for PmfFile {
    fn from(d: ExplicitDistribution) -> Self {
        PmfFile {
            n: d.pmf.len(),
            pmf: d.pmf,
        }
    }
}

impl ExplicitDistribution {
    /// Wraps a pmf, renormalizing drift below [`MASS_TOLERANCE`].
    pub fn new(mut pmf: Vec<f64>) -> Result<Self> {
        validate_weights(&mut pmf, "pmf")?;
        Ok(ExplicitDistribution { pmf })
    }

    /// Normalizes arbitrary non-negative weights with positive total.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "weights must have a positive finite total, got {total}"
            )));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        Ok(ExplicitDistribution {
            pmf: vec![1.0 / n as f64; n],
        })
    }

    /// All mass on element `x` (1-based).
    pub fn point_mass(n: usize, x: usize) -> Result<Self> {
        if x == 0 || x > n {
            return Err(Error::InvalidArgument(format!(
                "point {x} outside [1, {n}]"
            )));
        }
        let mut pmf = vec![0.0; n];
        pmf[x - 1] = 1.0;
        Ok(ExplicitDistribution { pmf })
    }

    /// Uniform over the prefix `{1, ..., k}`.
    pub fn uniform_prefix(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!(
                "prefix length {k} outside [1, {n}]"
            )));
        }
        let mut pmf = vec![0.0; n];
        pmf[..k].fill(1.0 / k as f64);
        Ok(ExplicitDistribution { pmf })
    }

    pub fn n(&self) -> usize {
        self.pmf.len()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Probability of element `x` (1-based); zero outside the support.
    pub fn prob(&self, x: usize) -> f64 {
        if x == 0 {
            return 0.0;
        }
        self.pmf.get(x - 1).copied().unwrap_or(0.0)
    }

    /// Total mass of an interval.
    pub fn mass(&self, iv: Interval) -> f64 {
        self.pmf[iv.lo - 1..iv.hi].iter().sum()
    }

    /// Non-increasing up to `MASS_TOLERANCE` per step.
    pub fn is_monotone(&self) -> bool {
        self.pmf.windows(2).all(|w| w[1] <= w[0] + MASS_TOLERANCE)
    }

    /// Mirror image `x -> n + 1 - x`.
    pub fn reversed(&self) -> Self {
        let mut pmf = self.pmf.clone();
        pmf.reverse();
        ExplicitDistribution { pmf }
    }

    /// Conditional distribution on `iv`, re-indexed to `[1, |iv|]`.
    pub fn conditional(&self, iv: Interval) -> Result<Self> {
        if iv.lo == 0 || iv.hi > self.n() || iv.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "interval [{}, {}] outside [1, {}]",
                iv.lo,
                iv.hi,
                self.n()
            )));
        }
        Self::from_weights(self.pmf[iv.lo - 1..iv.hi].to_vec())
    }
}

/// Interval masses `D(I_1), ..., D(I_l)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedDistribution {
    weights: Vec<f64>,
}

impl ReducedDistribution {
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        validate_weights(&mut weights, "reduced weights")?;
        Ok(ReducedDistribution { weights })
    }

    /// Empirical masses from interval counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("no counts".into()));
        }
        let t = total as f64;
        Self::new(counts.iter().map(|&c| c as f64 / t).collect())
    }

    pub fn ell(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The same weights viewed as a distribution over `[l]`.
    pub fn to_distribution(&self) -> ExplicitDistribution {
        ExplicitDistribution {
            pmf: self.weights.clone(),
        }
    }
}

/// A distribution that is constant on each interval of a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlattenedView {
    partition: IntervalPartition,
    reduced: ReducedDistribution,
}

impl FlattenedView {
    pub fn new(partition: IntervalPartition, reduced: ReducedDistribution) -> Result<Self> {
        if partition.len() != reduced.ell() {
            return Err(Error::DimensionMismatch {
                left: partition.len(),
                right: reduced.ell(),
            });
        }
        Ok(FlattenedView { partition, reduced })
    }

    /// Flattening of `p` over `partition`.
    pub fn of(p: &ExplicitDistribution, partition: &IntervalPartition) -> Result<Self> {
        let reduced = reduce(p, partition)?;
        Ok(FlattenedView {
            partition: partition.clone(),
            reduced,
        })
    }

    pub fn partition(&self) -> &IntervalPartition {
        &self.partition
    }

    pub fn reduced(&self) -> &ReducedDistribution {
        &self.reduced
    }

    pub fn n(&self) -> usize {
        self.partition.n()
    }

    /// Per-point density on each interval.
    pub fn densities(&self) -> Vec<f64> {
        self.partition
            .intervals()
            .iter()
            .zip(self.reduced.weights())
            .map(|(iv, &w)| w / iv.len() as f64)
            .collect()
    }

    pub fn prob(&self, x: usize) -> f64 {
        match self.partition.locate(x) {
            Some(j) => self.reduced.weights()[j] / self.partition.get(j).len() as f64,
            None => 0.0,
        }
    }

    /// Expands to an explicit pmf over `[n]`.
    pub fn to_distribution(&self) -> ExplicitDistribution {
        let mut pmf = Vec::with_capacity(self.n());
        for (iv, d) in self.partition.intervals().iter().zip(self.densities()) {
            pmf.extend(std::iter::repeat_n(d, iv.len()));
        }
        ExplicitDistribution { pmf }
    }

    /// Exact TV distance to the closest non-increasing distribution, solved
    /// on the `l` interval values rather than the expanded pmf.
    pub fn distance_to_monotone(&self) -> f64 {
        let w: Vec<f64> = self.partition.sizes().iter().map(|&s| s as f64).collect();
        0.5 * l1_to_nonincreasing(&self.densities(), &w)
    }

    /// Exact TV distance to an explicit distribution over the same domain.
    pub fn tv_to(&self, p: &ExplicitDistribution) -> Result<f64> {
        if p.n() != self.n() {
            return Err(Error::DimensionMismatch {
                left: self.n(),
                right: p.n(),
            });
        }
        let mut l1 = 0.0;
        for (iv, d) in self.partition.intervals().iter().zip(self.densities()) {
            l1 += p.pmf[iv.lo - 1..iv.hi]
                .iter()
                .map(|&q| (q - d).abs())
                .sum::<f64>();
        }
        Ok(0.5 * l1)
    }
}

fn check_partition(p: &ExplicitDistribution, partition: &IntervalPartition) -> Result<()> {
    if partition.n() != p.n() {
        return Err(Error::InvalidPartition(format!(
            "partition covers [1, {}] but the distribution lives on [1, {}]",
            partition.n(),
            p.n()
        )));
    }
    Ok(())
}

/// Total variation distance, half the L1 distance.
pub fn tv_distance(p: &ExplicitDistribution, q: &ExplicitDistribution) -> Result<f64> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch {
            left: p.n(),
            right: q.n(),
        });
    }
    Ok(0.5 * p.pmf.iter().zip(&q.pmf).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Self-collision probability `sum_i p(i)^2`.
pub fn l2_norm_sq(p: &ExplicitDistribution) -> f64 {
    p.pmf.iter().map(|x| x * x).sum()
}

/// Averages the mass of `p` uniformly within each interval.
pub fn flatten(p: &ExplicitDistribution, partition: &IntervalPartition) -> Result<ExplicitDistribution> {
    Ok(FlattenedView::of(p, partition)?.to_distribution())
}

/// Interval masses of `p`.
pub fn reduce(p: &ExplicitDistribution, partition: &IntervalPartition) -> Result<ReducedDistribution> {
    check_partition(p, partition)?;
    let weights = partition.intervals().iter().map(|&iv| p.mass(iv)).collect();
    ReducedDistribution::new(weights)
}

/// TV distance from `p` to the nearest non-increasing distribution.
pub fn distance_to_monotone(p: &ExplicitDistribution) -> f64 {
    0.5 * l1_to_nonincreasing(&p.pmf, &vec![1.0; p.n()])
}

/// Lower-bound instance: elements `(2i-1, 2i)` carry masses
/// `(1 + eps) / (2 half_n)` and `(1 - eps) / (2 half_n)`, heavier first when
/// `signs[i]` is true.
pub fn gen_no_instance_with_signs(half_n: usize, eps: f64, signs: &[bool]) -> Result<ExplicitDistribution> {
    if half_n == 0 {
        return Err(Error::InvalidArgument("half_n must be positive".into()));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "bias must lie in [0, 1], got {eps}"
        )));
    }
    if signs.len() != half_n {
        return Err(Error::DimensionMismatch {
            left: half_n,
            right: signs.len(),
        });
    }
    let denom = 2.0 * half_n as f64;
    let hi = (1.0 + eps) / denom;
    let lo = (1.0 - eps) / denom;
    let mut pmf = Vec::with_capacity(2 * half_n);
    for &s in signs {
        if s {
            pmf.extend([hi, lo]);
        } else {
            pmf.extend([lo, hi]);
        }
    }
    ExplicitDistribution::new(pmf)
}

/// Lower-bound instance with independent fair signs.
pub fn gen_no_instance<R: Rng + ?Sized>(half_n: usize, eps: f64, rng: &mut R) -> Result<ExplicitDistribution> {
    let signs: Vec<bool> = (0..half_n).map(|_| rng.random()).collect();
    gen_no_instance_with_signs(half_n, eps, &signs)
}

/// Families of non-increasing distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotoneKind {
    /// `p(i) ∝ param^(i-1)`, `param` in (0, 1].
    Geometric,
    /// `p(i) ∝ i^(-param)`, `param >= 0`.
    Power,
    /// `param` steps: `param + 1` equal segments with heights decreasing
    /// linearly to zero on the last one.
    Step,
}

impl std::str::FromStr for MonotoneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(MonotoneKind::Geometric),
            "power" => Ok(MonotoneKind::Power),
            "step" => Ok(MonotoneKind::Step),
            other => Err(Error::InvalidArgument(format!(
                "unknown monotone family {other:?}"
            ))),
        }
    }
}

pub fn gen_monotone(kind: MonotoneKind, n: usize, param: f64) -> Result<ExplicitDistribution> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let weights: Vec<f64> = match kind {
        MonotoneKind::Geometric => {
            if !(param > 0.0 && param <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "geometric ratio must lie in (0, 1], got {param}"
                )));
            }
            // Built by repeated multiplication so the sequence is exactly non-increasing.
            let mut w = Vec::with_capacity(n);
            let mut cur = 1.0f64;
            for _ in 0..n {
                w.push(cur);
                cur *= param;
            }
            w
        }
        MonotoneKind::Power => {
            if !(param >= 0.0 && param.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "power exponent must be non-negative, got {param}"
                )));
            }
            (1..=n).map(|i| (i as f64).powf(-param)).collect()
        }
        MonotoneKind::Step => {
            if param.fract() != 0.0 || param < 1.0 || param + 1.0 > n as f64 {
                return Err(Error::InvalidArgument(format!(
                    "step count must be an integer in [1, n - 1], got {param}"
                )));
            }
            let s = param as usize;
            let segments = s + 1;
            (0..n)
                .map(|i| {
                    let t = i * segments / n;
                    (s - t) as f64
                })
                .collect()
        }
    };
    let total: f64 = weights.iter().sum();
    let mut pmf: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
    // Normalization can leave tiny upward rounding steps; clamp them.
    for i in 1..pmf.len() {
        if pmf[i] > pmf[i - 1] {
            pmf[i] = pmf[i - 1];
        }
    }
    ExplicitDistribution::new(pmf)
}

/// TV distance between `p` and its flattening over the oblivious partition
/// with parameter `alpha`. For monotone `p` this is at most `alpha`; a value
/// above `2 eps + alpha` certifies that `p` is `eps`-far from monotone.
pub fn flattened_distance_certificate(p: &ExplicitDistribution, alpha: f64) -> Result<f64> {
    let partition = birge_partition(p.n(), alpha)?;
    FlattenedView::of(p, &partition)?.tv_to(p)
}
