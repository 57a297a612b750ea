//! Identity and closeness testing of monotone distributions by reduction to
//! the interval masses of the oblivious partition.

use super::{count, Decision, TesterConfig, Verdict};
use crate::dist::{reduce, tv_distance, ExplicitDistribution, ReducedDistribution};
use crate::error::{Error, Result};
use crate::oracles::{MemoryLedger, ReducedStream, SampleSource};
use crate::partition::{birge_partition, IntervalPartition};

/// A streaming identity tester over a small domain `[l]`.
pub trait ReducedIdentityTester {
    fn test(
        &self,
        stream: &mut dyn SampleSource,
        target: &ExplicitDistribution,
        eps: f64,
        ledger: &mut MemoryLedger,
    ) -> Result<Decision>;
}

/// A streaming closeness tester over a small domain `[l]`.
pub trait ReducedClosenessTester {
    fn test(
        &self,
        first: &mut dyn SampleSource,
        second: &mut dyn SampleSource,
        eps: f64,
        ledger: &mut MemoryLedger,
    ) -> Result<Decision>;
}

/// Counts every symbol and compares the empirical distribution to the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalIdentityBaseline {
    pub c_samples: f64,
}

/// Counts both streams and compares the two empirical distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalClosenessBaseline {
    pub c_samples: f64,
}

fn count_stream(
    stream: &mut dyn SampleSource,
    ell: usize,
    samples: u64,
) -> Result<ReducedDistribution> {
    let mut counts = vec![0u64; ell];
    for _ in 0..samples {
        let x = stream.next_sample()?;
        counts[x - 1] += 1;
    }
    ReducedDistribution::from_counts(&counts)
}

/// Draws `c l / eps^2` samples into `l` counters and accepts iff the
/// empirical distribution is within `eps / 2` of `target`.
pub fn reduced_identity_baseline(
    stream: &mut dyn SampleSource,
    target: &ExplicitDistribution,
    eps: f64,
    c: f64,
    ledger: &mut MemoryLedger,
) -> Result<Decision> {
    let ell = target.n();
    if stream.n() != ell {
        return Err(Error::DimensionMismatch {
            left: stream.n(),
            right: ell,
        });
    }
    let samples = count(c * ell as f64 / (eps * eps), "identity sample count")?;
    ledger.store_counters(ell as u64)?;
    let empirical = count_stream(stream, ell, samples)?.to_distribution();
    ledger.release_counters(ell as u64);
    Ok(Decision::from_accept(tv_distance(&empirical, target)? <= eps / 2.0))
}

/// Two-stream counterpart of [`reduced_identity_baseline`].
pub fn reduced_closeness_baseline(
    first: &mut dyn SampleSource,
    second: &mut dyn SampleSource,
    eps: f64,
    c: f64,
    ledger: &mut MemoryLedger,
) -> Result<Decision> {
    let ell = first.n();
    if second.n() != ell {
        return Err(Error::DimensionMismatch {
            left: ell,
            right: second.n(),
        });
    }
    let samples = count(c * ell as f64 / (eps * eps), "closeness sample count")?;
    ledger.store_counters(2 * ell as u64)?;
    let a = count_stream(first, ell, samples)?.to_distribution();
    let b = count_stream(second, ell, samples)?.to_distribution();
    ledger.release_counters(2 * ell as u64);
    Ok(Decision::from_accept(tv_distance(&a, &b)? <= eps / 2.0))
}

impl ReducedIdentityTester for EmpiricalIdentityBaseline {
    fn test(
        &self,
        stream: &mut dyn SampleSource,
        target: &ExplicitDistribution,
        eps: f64,
        ledger: &mut MemoryLedger,
    ) -> Result<Decision> {
        reduced_identity_baseline(stream, target, eps, self.c_samples, ledger)
    }
}

impl ReducedClosenessTester for EmpiricalClosenessBaseline {
    fn test(
        &self,
        first: &mut dyn SampleSource,
        second: &mut dyn SampleSource,
        eps: f64,
        ledger: &mut MemoryLedger,
    ) -> Result<Decision> {
        reduced_closeness_baseline(first, second, eps, self.c_samples, ledger)
    }
}

fn oblivious(n: usize, eps: f64) -> Result<IntervalPartition> {
    birge_partition(n, eps.min(0.99))
}

fn budgeted_ledger(cfg: &TesterConfig, n: usize) -> MemoryLedger {
    match cfg.m {
        Some(m) => MemoryLedger::new(m, n),
        None => MemoryLedger::unbounded(n),
    }
}

/// Accepts when `D = D*` and rejects when `d_TV(D, D*) >= 3 eps`, each with
/// probability at least 2/3 given a sound reduced tester. Samples are mapped
/// to their oblivious-partition interval on arrival; nothing is stored but
/// the reduced tester's state.
///
/// The budget `m`, when given, is enforced as is (no slack).
pub fn identity_monotone_streaming(
    stream: &mut dyn SampleSource,
    dstar: &ExplicitDistribution,
    cfg: &TesterConfig,
    tester: &dyn ReducedIdentityTester,
) -> Result<Verdict> {
    cfg.validate()?;
    if !dstar.is_monotone() {
        return Err(Error::InvalidArgument("reference distribution is not non-increasing".into()));
    }
    if stream.n() != dstar.n() {
        return Err(Error::DimensionMismatch {
            left: stream.n(),
            right: dstar.n(),
        });
    }
    let partition = oblivious(dstar.n(), cfg.eps)?;
    let target = reduce(dstar, &partition)?.to_distribution();
    let mut ledger = budgeted_ledger(cfg, dstar.n());
    let start = stream.consumed();
    let decision = {
        let mut reduced = ReducedStream::new(stream, &partition)?;
        tester.test(&mut reduced, &target, cfg.eps, &mut ledger)?
    };
    Ok(Verdict {
        decision,
        samples: stream.consumed() - start,
        cond_queries: 0,
        peak_bits: ledger.peak(),
        flagged_intervals: Vec::new(),
    })
}

/// Closeness version of [`identity_monotone_streaming`] for two unknown
/// monotone sources.
pub fn closeness_monotone_streaming(
    first: &mut dyn SampleSource,
    second: &mut dyn SampleSource,
    cfg: &TesterConfig,
    tester: &dyn ReducedClosenessTester,
) -> Result<Verdict> {
    cfg.validate()?;
    let n = first.n();
    if second.n() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: second.n(),
        });
    }
    let partition = oblivious(n, cfg.eps)?;
    let mut ledger = budgeted_ledger(cfg, n);
    let (s1, s2) = (first.consumed(), second.consumed());
    let decision = {
        let mut r1 = ReducedStream::new(first, &partition)?;
        let mut r2 = ReducedStream::new(second, &partition)?;
        tester.test(&mut r1, &mut r2, cfg.eps, &mut ledger)?
    };
    Ok(Verdict {
        decision,
        samples: first.consumed() - s1 + second.consumed() - s2,
        cond_queries: 0,
        peak_bits: ledger.peak(),
        flagged_intervals: Vec::new(),
    })
}
