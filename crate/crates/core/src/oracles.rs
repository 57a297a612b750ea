//! Sample access: SAMP and pair-conditional oracles, single-pass streams and
//! the bit ledger that enforces a tester's memory budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Binomial, Distribution};

use crate::dist::ExplicitDistribution;
use crate::error::{Error, Result};
use crate::partition::IntervalPartition;

/// Environment variable holding the root seed when none is given explicitly.
pub const SEED_ENV: &str = "STREAMDIST_SEED";

/// Bits charged per counter and per sketch cell.
pub const COUNTER_BITS: u64 = 64;

/// The generator used for every random choice in the crate.
pub type StreamRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes `root` and `stream` into an independent child seed (splitmix64 finalizer).
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut z = root
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Reads [`SEED_ENV`], if set and parseable.
pub fn seed_from_env() -> Option<u64> {
    std::env::var(SEED_ENV).ok()?.trim().parse().ok()
}

/// `ceil(log2 n)`, at least 1: the cost of storing one element of `[n]`.
pub fn sample_bit_cost(n: usize) -> u64 {
    if n <= 2 {
        1
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as u64
    }
}

/// Bit-level accounting of a tester's retained state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryLedger {
    budget: Option<u64>,
    used: u64,
    peak: u64,
    sample_bits: u64,
    counter_bits: u64,
}

impl MemoryLedger {
    /// A ledger with a hard budget over domain `[n]`.
    pub fn new(budget_bits: u64, n: usize) -> Self {
        MemoryLedger {
            budget: Some(budget_bits),
            used: 0,
            peak: 0,
            sample_bits: sample_bit_cost(n),
            counter_bits: COUNTER_BITS,
        }
    }

    /// A ledger that only records usage, for the non-streaming testers.
    pub fn unbounded(n: usize) -> Self {
        MemoryLedger {
            budget: None,
            ..Self::new(0, n)
        }
    }

    /// Overrides the per-sample and per-counter costs.
    pub fn with_costs(mut self, sample_bits: u64, counter_bits: u64) -> Self {
        self.sample_bits = sample_bits;
        self.counter_bits = counter_bits;
        self
    }

    pub fn charge(&mut self, bits: u64) -> Result<()> {
        let after = self.used + bits;
        if let Some(budget) = self.budget {
            if after > budget {
                return Err(Error::BudgetExceeded {
                    requested: bits,
                    used: self.used,
                    budget,
                });
            }
        }
        self.used = after;
        self.peak = self.peak.max(after);
        Ok(())
    }

    pub fn release(&mut self, bits: u64) {
        debug_assert!(bits <= self.used, "releasing {bits} of {} bits", self.used);
        self.used = self.used.saturating_sub(bits);
    }

    /// Charges storage for `k` domain elements.
    pub fn store_samples(&mut self, k: u64) -> Result<()> {
        self.charge(k * self.sample_bits)
    }

    pub fn release_samples(&mut self, k: u64) {
        self.release(k * self.sample_bits)
    }

    /// Charges `k` counters.
    pub fn store_counters(&mut self, k: u64) -> Result<()> {
        self.charge(k * self.counter_bits)
    }

    pub fn release_counters(&mut self, k: u64) {
        self.release(k * self.counter_bits)
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn peak(&self) -> u64 {
        self.peak
    }

    pub fn sample_bits(&self) -> u64 {
        self.sample_bits
    }

    pub fn counter_bits(&self) -> u64 {
        self.counter_bits
    }
}

/// I.i.d. draws from an explicit distribution.
#[derive(Debug, Clone)]
pub struct SampOracle {
    n: usize,
    alias: WeightedAliasIndex<f64>,
    rng: StreamRng,
    draws: u64,
}

impl SampOracle {
    pub fn new(source: &ExplicitDistribution, seed: u64) -> Result<Self> {
        let alias = WeightedAliasIndex::new(source.pmf().to_vec())
            .map_err(|e| Error::InvalidDistribution(format!("cannot build sampler: {e}")))?;
        Ok(SampOracle {
            n: source.n(),
            alias,
            rng: rng_from_seed(seed),
            draws: 0,
        })
    }

    /// One draw, 1-based.
    pub fn draw(&mut self) -> usize {
        self.draws += 1;
        self.alias.sample(&mut self.rng) + 1
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Conditional sampling restricted to pairs.
#[derive(Debug, Clone)]
pub struct PcondOracle {
    pmf: Vec<f64>,
    rng: StreamRng,
    cond_queries: u64,
}

impl PcondOracle {
    pub fn new(source: &ExplicitDistribution, seed: u64) -> Self {
        PcondOracle {
            pmf: source.pmf().to_vec(),
            rng: rng_from_seed(seed),
            cond_queries: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.pmf.len()
    }

    pub fn cond_queries(&self) -> u64 {
        self.cond_queries
    }

    /// Probability that a query on `{x, y}` returns `y`. Zero-mass pairs
    /// answer uniformly.
    fn prob_second(&self, x: usize, y: usize) -> Result<f64> {
        let n = self.n();
        if x == y || x == 0 || y == 0 || x > n || y > n {
            return Err(Error::InvalidArgument(format!(
                "pair query needs two distinct elements of [1, {n}], got ({x}, {y})"
            )));
        }
        let (px, py) = (self.pmf[x - 1], self.pmf[y - 1]);
        Ok(if px + py > 0.0 { py / (px + py) } else { 0.5 })
    }

    /// One conditional draw from `{x, y}`.
    pub fn draw(&mut self, x: usize, y: usize) -> Result<usize> {
        let p = self.prob_second(x, y)?;
        self.cond_queries += 1;
        Ok(if self.rng.random_bool(p) { y } else { x })
    }

    /// Issues `queries` draws on `{x, y}` and returns how many produced `y`.
    /// Equivalent in distribution to calling [`draw`](Self::draw) repeatedly.
    pub fn count_second(&mut self, x: usize, y: usize, queries: u64) -> Result<u64> {
        let p = self.prob_second(x, y)?;
        self.cond_queries += queries;
        let b = Binomial::new(queries, p)
            .map_err(|e| Error::InvalidArgument(format!("binomial draw: {e}")))?;
        Ok(b.sample(&mut self.rng))
    }
}

/// A single-pass source of domain elements.
pub trait SampleSource {
    /// Next element (1-based); consuming is free in the ledger.
    fn next_sample(&mut self) -> Result<usize>;
    /// Number of elements consumed so far.
    fn consumed(&self) -> u64;
    /// Domain size.
    fn n(&self) -> usize;
}

/// SAMP draws served once each, optionally capped.
#[derive(Debug, Clone)]
pub struct SampleStream {
    oracle: SampOracle,
    consumed: u64,
    limit: Option<u64>,
}

impl SampleStream {
    pub fn new(source: &ExplicitDistribution, seed: u64) -> Result<Self> {
        Ok(Self::from_oracle(SampOracle::new(source, seed)?))
    }

    pub fn from_oracle(oracle: SampOracle) -> Self {
        SampleStream {
            oracle,
            consumed: 0,
            limit: None,
        }
    }

    pub fn with_limit(mut self, limit: u64) -> Self {
        self.limit = Some(limit);
        self
    }

    pub fn limit(&self) -> Option<u64> {
        self.limit
    }
}

impl SampleSource for SampleStream {
    fn next_sample(&mut self) -> Result<usize> {
        if let Some(limit) = self.limit {
            if self.consumed >= limit {
                return Err(Error::EndOfStream {
                    consumed: self.consumed,
                });
            }
        }
        self.consumed += 1;
        Ok(self.oracle.draw())
    }

    fn consumed(&self) -> u64 {
        self.consumed
    }

    fn n(&self) -> usize {
        self.oracle.n()
    }
}

/// Replays a fixed sequence once.
#[derive(Debug, Clone)]
pub struct ReplayStream {
    n: usize,
    items: Vec<usize>,
    pos: usize,
}

impl ReplayStream {
    pub fn new(n: usize, items: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = items.iter().find(|&&x| x == 0 || x > n) {
            return Err(Error::InvalidArgument(format!("element {bad} outside [1, {n}]")));
        }
        Ok(ReplayStream { n, items, pos: 0 })
    }
}

impl SampleSource for ReplayStream {
    fn next_sample(&mut self) -> Result<usize> {
        let x = *self.items.get(self.pos).ok_or(Error::EndOfStream {
            consumed: self.pos as u64,
        })?;
        self.pos += 1;
        Ok(x)
    }

    fn consumed(&self) -> u64 {
        self.pos as u64
    }

    fn n(&self) -> usize {
        self.n
    }
}

/// Maps each element of an underlying stream to the (1-based) index of its
/// interval. Holds nothing beyond the partition, which is implicit in the
/// tester's parameters.
pub struct ReducedStream<'a> {
    inner: &'a mut dyn SampleSource,
    partition: &'a IntervalPartition,
}

impl<'a> ReducedStream<'a> {
    pub fn new(inner: &'a mut dyn SampleSource, partition: &'a IntervalPartition) -> Result<Self> {
        if partition.n() != inner.n() {
            return Err(Error::DimensionMismatch {
                left: partition.n(),
                right: inner.n(),
            });
        }
        Ok(ReducedStream { inner, partition })
    }
}

impl SampleSource for ReducedStream<'_> {
    fn next_sample(&mut self) -> Result<usize> {
        let x = self.inner.next_sample()?;
        self.partition
            .locate(x)
            .map(|j| j + 1)
            .ok_or_else(|| Error::InvalidArgument(format!("sample {x} outside the partition")))
    }

    fn consumed(&self) -> u64 {
        self.inner.consumed()
    }

    fn n(&self) -> usize {
        self.partition.len()
    }
}
