//! Interval machinery over the domain `[n] = {1, ..., n}`.
//!
//! Three partition families live here:
//!
//! * the oblivious (Birgé) decomposition, whose interval sizes grow
//!   geometrically and which flattens every non-increasing distribution to
//!   within the chosen accuracy;
//! * the weight bucketization of an explicit reference distribution, used by
//!   the conditional-sampling identity tester;
//! * fine partitions pulled from samples, where every sampled point becomes a
//!   singleton and the gaps between them become intervals.
//!
//! Elements and interval endpoints are 1-based throughout.

use serde::{Deserialize, Serialize};

use crate::dist::{ExplicitDistribution, ReducedDistribution};
use crate::error::{Error, Result};
use crate::oracles::{MemoryLedger, SampleSource};

/// A closed interval `[lo, hi]` of domain elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> usize {
        self.hi + 1 - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn contains(&self, x: usize) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_singleton(&self) -> bool {
        self.lo == self.hi
    }
}

impl From<[usize; 2]> for Interval {
    fn from(v: [usize; 2]) -> Self {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [usize; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Ordered, disjoint, contiguous intervals covering `[1, n]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct IntervalPartition {
    intervals: Vec<Interval>,
}

impl IntervalPartition {
    /// Validates that `intervals` tile `[1, n]` with non-empty intervals in
    /// increasing order.
    pub fn new(n: usize, intervals: Vec<Interval>) -> Result<Self> {
        let p = Self::from_tiling(intervals)?;
        if p.n() != n {
            return Err(Error::InvalidPartition(format!(
                "partition covers [1, {}] but the domain is [1, {n}]",
                p.n()
            )));
        }
        Ok(p)
    }

    fn from_tiling(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidPartition("no intervals".into()));
        }
        let mut next = 1;
        for iv in &intervals {
            if iv.is_empty() {
                return Err(Error::InvalidPartition(format!(
                    "empty interval [{}, {}]",
                    iv.lo, iv.hi
                )));
            }
            if iv.lo != next {
                return Err(Error::InvalidPartition(format!(
                    "interval [{}, {}] should start at {next}",
                    iv.lo, iv.hi
                )));
            }
            next = iv.hi + 1;
        }
        Ok(IntervalPartition { intervals })
    }

    /// Builds the partition whose consecutive interval lengths are `sizes`.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let mut lo = 1;
        let mut intervals = Vec::with_capacity(sizes.len());
        for &s in sizes {
            if s == 0 {
                return Err(Error::InvalidPartition("zero-length interval".into()));
            }
            intervals.push(Interval::new(lo, lo + s - 1));
            lo += s;
        }
        Self::from_tiling(intervals)
    }

    /// The partition into a single interval `[1, n]`.
    pub fn whole(n: usize) -> Result<Self> {
        Self::from_sizes(&[n])
    }

    /// The partition of `[1, n]` into `n` singletons.
    pub fn singletons(n: usize) -> Result<Self> {
        Self::from_sizes(&vec![1; n])
    }

    /// Domain size covered.
    pub fn n(&self) -> usize {
        self.intervals.last().map_or(0, |iv| iv.hi)
    }

    /// Number of intervals.
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn get(&self, j: usize) -> Interval {
        self.intervals[j]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.intervals.iter().map(Interval::len).collect()
    }

    /// Index of the interval containing element `x`.
    pub fn locate(&self, x: usize) -> Option<usize> {
        if x == 0 || x > self.n() {
            return None;
        }
        Some(self.intervals.partition_point(|iv| iv.hi < x))
    }
}

impl TryFrom<Vec<Interval>> for IntervalPartition {
    type Error = Error;

    fn try_from(intervals: Vec<Interval>) -> Result<Self> {
        Self::from_tiling(intervals)
    }
}

impl From<IntervalPartition> for Vec<Interval> {
    fn from(p: IntervalPartition) -> Self {
        p.intervals
    }
}

/// Oblivious decomposition of `[1, n]` with interval sizes
/// `max(1, floor((1 + eps1)^j))` for `j = 1, 2, ...`, the last interval
/// truncated at `n`.
pub fn birge_partition(n: usize, eps1: f64) -> Result<IntervalPartition> {
    if !(eps1 > 0.0 && eps1 < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "oblivious partition parameter must lie in (0, 1), got {eps1}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty domain".into()));
    }
    let base = 1.0 + eps1;
    let mut sizes = Vec::new();
    let mut covered = 0usize;
    let mut j: i32 = 1;
    while covered < n {
        let raw = base.powi(j).floor();
        let size = if raw >= n as f64 { n } else { (raw as usize).max(1) };
        let size = size.min(n - covered);
        sizes.push(size);
        covered += size;
        j += 1;
    }
    IntervalPartition::from_sizes(&sizes)
}

/// Weight buckets of an explicit distribution.
///
/// Bucket `0` holds the elements with `D*(i) < eta / n`; for `j >= 1`,
/// bucket `j` holds `2^(j-1) eta / n <= D*(i) < 2^j eta / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketPartition {
    eta: f64,
    n: usize,
    buckets: Vec<Vec<usize>>,
    bucket_of: Vec<usize>,
}

impl BucketPartition {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Buckets `B_0 ..= B_top`; intermediate buckets may be empty.
    pub fn buckets(&self) -> &[Vec<usize>] {
        &self.buckets
    }

    /// Index of the highest non-empty bucket.
    pub fn top(&self) -> usize {
        self.buckets.len() - 1
    }

    /// Bucket index of element `x` (1-based).
    pub fn bucket_of(&self, x: usize) -> usize {
        self.bucket_of[x - 1]
    }
}

pub fn bucketize(dstar: &ExplicitDistribution, eta: f64) -> Result<BucketPartition> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "bucket parameter must lie in (0, 1], got {eta}"
        )));
    }
    let n = dstar.n();
    let unit = eta / n as f64;
    let bucket_of: Vec<usize> = dstar
        .pmf()
        .iter()
        .map(|&p| {
            if p < unit {
                return 0;
            }
            let mut j = 1usize;
            let mut upper = 2.0 * unit;
            while p >= upper {
                j += 1;
                upper *= 2.0;
            }
            j
        })
        .collect();
    let top = bucket_of.iter().copied().max().unwrap_or(0);
    let mut buckets = vec![Vec::new(); top + 1];
    for (i, &b) in bucket_of.iter().enumerate() {
        buckets[b].push(i + 1);
    }
    Ok(BucketPartition {
        eta,
        n,
        buckets,
        bucket_of,
    })
}

/// Partition pulled from samples: every distinct sampled point is a
/// singleton and each gap between consecutive points (and the tail after the
/// largest one) is its own interval.
pub fn fine_partition(samples: &[usize], n: usize) -> Result<IntervalPartition> {
    if n == 0 {
        return Err(Error::InvalidArgument("empty domain".into()));
    }
    let mut points: Vec<usize> = samples.to_vec();
    if let Some(&bad) = points.iter().find(|&&x| x == 0 || x > n) {
        return Err(Error::InvalidArgument(format!(
            "sample {bad} outside [1, {n}]"
        )));
    }
    points.sort_unstable();
    points.dedup();
    let mut intervals = Vec::with_capacity(2 * points.len() + 1);
    let mut prev = 0usize;
    for &x in &points {
        if x > prev + 1 {
            intervals.push(Interval::new(prev + 1, x - 1));
        }
        intervals.push(Interval::new(x, x));
        prev = x;
    }
    if prev < n {
        intervals.push(Interval::new(prev + 1, n));
    }
    IntervalPartition::new(n, intervals)
}

/// Learns the interval masses from `samples` stream draws, holding one
/// counter per interval.
pub fn empirical_reduced(
    stream: &mut dyn SampleSource,
    partition: &IntervalPartition,
    samples: u64,
    ledger: &mut MemoryLedger,
) -> Result<ReducedDistribution> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let bits = partition.len() as u64 * ledger.counter_bits();
    ledger.charge(bits)?;
    let mut counts = vec![0u64; partition.len()];
    for _ in 0..samples {
        let x = stream.next_sample()?;
        let j = partition.locate(x).ok_or_else(|| {
            Error::InvalidArgument(format!("sample {x} outside the partitioned domain"))
        })?;
        counts[j] += 1;
    }
    ledger.release(bits);
    ReducedDistribution::from_counts(&counts)
}
