//! Monotonicity testing over the oblivious partition: learn the interval
//! masses, flag intervals whose collision rate is too high for a near-flat
//! conditional, and reject when flagged mass or the learned flattening is
//! too far from monotone.

use std::collections::HashMap;

use super::{count, Decision, FlaggedInterval, TesterConfig, Verdict, Window};
use crate::collision::{classify_bipartite, classify_pairwise, loglog, Classification, CollisionStats, ThresholdMode};
use crate::dist::{FlattenedView, ReducedDistribution};
use crate::error::Result;
use crate::oracles::{MemoryLedger, SampleSource};
use crate::partition::{birge_partition, empirical_reduced, IntervalPartition};
use crate::profiles::Constants;

/// Sample plan of the two non-streaming testers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollisionSchedule {
    pub ell: usize,
    /// Draws for the interval masses.
    pub t: u64,
    /// Draws for collision counting.
    pub s: u64,
}

impl CollisionSchedule {
    pub fn total_samples(&self) -> u64 {
        self.t + self.s
    }
}

fn partition_for(n: usize, eps: f64) -> Result<IntervalPartition> {
    birge_partition(n, (eps * eps).min(0.99))
}

fn logs(n: usize) -> (f64, f64) {
    ((n as f64).ln().max(1.0), loglog(n))
}

/// Sample plan of [`collision_monotonicity`] (`bipartite = false`) or
/// [`bipartite_collision_monotonicity`].
pub fn collision_schedule(n: usize, cfg: &TesterConfig, bipartite: bool) -> Result<CollisionSchedule> {
    cfg.validate()?;
    let eps = cfg.eps;
    let (ln, ll) = logs(n);
    let ell = partition_for(n, eps)?.len();
    let (t, s) = if bipartite {
        (
            cfg.c("bipartite.T") * ln * ln * ll / eps.powi(6),
            cfg.c("bipartite.S") * n as f64 * ln / eps.powi(8),
        )
    } else {
        (
            cfg.c("collision.T") * ln * ln * ll / eps.powi(6),
            cfg.c("collision.S") * (n as f64).sqrt() * ln * ll / eps.powi(8),
        )
    };
    Ok(CollisionSchedule {
        ell,
        t: count(t, "interval-mass sample count")?,
        s: count(s, "collision sample count")?,
    })
}

/// Shared last step: reject on heavy flagged mass, otherwise accept iff the
/// learned flattening is `2 eps`-close to monotone. The closeness check runs
/// on the `l` interval values and is not charged to the ledger.
fn decide(
    partition: &IntervalPartition,
    reduced: &ReducedDistribution,
    flagged: &[FlaggedInterval],
    eps: f64,
) -> Result<Decision> {
    let weight: f64 = flagged.iter().map(|f| f.weight).sum();
    if weight > 5.0 * eps {
        return Ok(Decision::Reject);
    }
    let view = FlattenedView::new(partition.clone(), reduced.clone())?;
    Ok(Decision::from_accept(view.distance_to_monotone() <= 2.0 * eps))
}

fn locate(partition: &IntervalPartition, x: usize) -> Result<usize> {
    partition.locate(x).ok_or_else(|| {
        crate::error::Error::InvalidArgument(format!("sample {x} outside [1, {}]", partition.n()))
    })
}

/// Pairwise-collision monotonicity tester.
///
/// Accepts monotone `D` and rejects `D` that is not `7 eps`-close to
/// monotone, each with probability at least 2/3 under calibrated constants.
/// All `S` collision samples are held, so peak memory grows with `S`.
pub fn collision_monotonicity(stream: &mut dyn SampleSource, cfg: &TesterConfig) -> Result<Verdict> {
    let n = stream.n();
    let plan = collision_schedule(n, cfg, false)?;
    let partition = partition_for(n, cfg.eps)?;
    let mut ledger = MemoryLedger::unbounded(n);
    let start = stream.consumed();
    let reduced = empirical_reduced(stream, &partition, plan.t, &mut ledger)?;

    let ell = partition.len();
    let mut freq: Vec<HashMap<usize, u64>> = vec![HashMap::new(); ell];
    let mut stats: Vec<CollisionStats> = partition
        .intervals()
        .iter()
        .map(|&iv| CollisionStats::pairwise(iv, &[]))
        .collect();
    for _ in 0..plan.s {
        let x = stream.next_sample()?;
        let j = locate(&partition, x)?;
        ledger.store_samples(1)?;
        let k = freq[j].entry(x).or_insert(0);
        stats[j].collisions += *k;
        stats[j].observed += 1;
        *k += 1;
    }
    let flagged: Vec<FlaggedInterval> = stats
        .iter()
        .enumerate()
        .filter(|(_, st)| {
            classify_pairwise(st, cfg.eps, n, cfg.c("collision.c1")) == Classification::FarFromUniform
        })
        .map(|(j, st)| FlaggedInterval::new(st.interval, reduced.weights()[j], st.pairwise_rate()))
        .collect();
    ledger.release_samples(plan.s);
    let decision = decide(&partition, &reduced, &flagged, cfg.eps)?;
    Ok(Verdict {
        decision,
        samples: stream.consumed() - start,
        cond_queries: 0,
        peak_bits: ledger.peak(),
        flagged_intervals: flagged,
    })
}

/// Bipartite-collision monotonicity tester. Within each interval, arrivals
/// from the first half of the collision draws form the stored side `S_1`
/// and arrivals from the second half are counted against it.
pub fn bipartite_collision_monotonicity(
    stream: &mut dyn SampleSource,
    cfg: &TesterConfig,
) -> Result<Verdict> {
    let n = stream.n();
    let plan = collision_schedule(n, cfg, true)?;
    let partition = partition_for(n, cfg.eps)?;
    let mut ledger = MemoryLedger::unbounded(n);
    let start = stream.consumed();
    let reduced = empirical_reduced(stream, &partition, plan.t, &mut ledger)?;

    let ell = partition.len();
    let mut stored: Vec<HashMap<usize, u64>> = vec![HashMap::new(); ell];
    let mut stats: Vec<CollisionStats> = partition
        .intervals()
        .iter()
        .map(|&iv| CollisionStats::bipartite(iv, &[], &[]))
        .collect();
    let first_half = plan.s / 2;
    for i in 0..plan.s {
        let x = stream.next_sample()?;
        let j = locate(&partition, x)?;
        if i < first_half {
            ledger.store_samples(1)?;
            *stored[j].entry(x).or_insert(0) += 1;
            stats[j].stored += 1;
        } else {
            stats[j].collisions += stored[j].get(&x).copied().unwrap_or(0);
            stats[j].observed += 1;
        }
    }
    let flagged: Vec<FlaggedInterval> = stats
        .iter()
        .enumerate()
        .filter(|(_, st)| {
            classify_bipartite(st, cfg.eps, ThresholdMode::Monotone, cfg.c("collision.c2"))
                == Classification::FarFromUniform
        })
        .map(|(j, st)| FlaggedInterval::new(st.interval, reduced.weights()[j], st.bipartite_rate()))
        .collect();
    ledger.release_samples(first_half);
    let decision = decide(&partition, &reduced, &flagged, cfg.eps)?;
    Ok(Verdict {
        decision,
        samples: stream.consumed() - start,
        cond_queries: 0,
        peak_bits: ledger.peak(),
        flagged_intervals: flagged,
    })
}

/// `ln^2 n / eps^6 <= m <= sqrt(n) / eps^3`, each end scaled.
pub fn streaming_window(n: usize, eps: f64, constants: &Constants) -> Window {
    let (ln, _) = logs(n);
    Window {
        lo: constants.get("stream.window_lo") * ln * ln / eps.powi(6),
        hi: constants.get("stream.window_hi") * (n as f64).sqrt() / eps.powi(3),
    }
}

/// Plan of [`streaming_monotonicity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamingSchedule {
    pub m: u64,
    pub ell: usize,
    pub t: u64,
    pub s: u64,
    /// Stored arrivals per interval.
    pub s1: u64,
    /// Compared arrivals per interval.
    pub s2: u64,
    /// Ledger capacity, `slack * m`.
    pub budget_bits: u64,
}

impl StreamingSchedule {
    pub fn total_samples(&self) -> u64 {
        self.t + self.s
    }
}

pub fn streaming_schedule(n: usize, cfg: &TesterConfig) -> Result<StreamingSchedule> {
    cfg.validate()?;
    let eps = cfg.eps;
    let m = streaming_window(n, eps, &cfg.constants).resolve(cfg.m)?;
    let (ln, ll) = logs(n);
    let mf = m as f64;
    let nf = n as f64;
    Ok(StreamingSchedule {
        m,
        ell: partition_for(n, eps)?.len(),
        t: count(cfg.c("stream.T") * ln * ln * ll / eps.powi(6), "interval-mass sample count")?,
        s: count(cfg.c("stream.S") * nf * ln / (mf * eps.powi(8)), "collision sample count")?,
        s1: count(cfg.c("stream.S1") * mf * eps * eps / (ln * ln), "stored sample count")?,
        s2: count(cfg.c("stream.S2") * nf / (mf * eps.powi(4)), "compared sample count")?,
        budget_bits: (cfg.slack * mf).floor() as u64,
    })
}

#[derive(Default, Clone)]
struct IntervalState {
    stored: HashMap<usize, u64>,
    stored_len: u64,
    observed: u64,
    collisions: u64,
}

/// Single-pass monotonicity tester within `slack * m` bits.
///
/// Phase one keeps one counter per interval for the learned masses; these
/// stay live to the end. Phase two stores the first `S_1` arrivals of each
/// interval and counts collisions of the next `S_2` arrivals against them;
/// stored samples are released once an interval has seen its `S_2`
/// arrivals. Singleton intervals are skipped since their collision rate is
/// 1, below every flag threshold.
pub fn streaming_monotonicity(stream: &mut dyn SampleSource, cfg: &TesterConfig) -> Result<Verdict> {
    let n = stream.n();
    let plan = streaming_schedule(n, cfg)?;
    let eps = cfg.eps;
    let partition = partition_for(n, eps)?;
    let ell = partition.len();
    let mut ledger = MemoryLedger::new(plan.budget_bits, n);
    let start = stream.consumed();

    ledger.store_counters(ell as u64)?;
    let mut counts = vec![0u64; ell];
    for _ in 0..plan.t {
        counts[locate(&partition, stream.next_sample()?)?] += 1;
    }
    let reduced = ReducedDistribution::from_counts(&counts)?;

    // A collision tally and an arrival tally per multi-point interval.
    let tallies = 2 * partition.intervals().iter().filter(|iv| !iv.is_singleton()).count() as u64;
    ledger.store_counters(tallies)?;
    let mut state = vec![IntervalState::default(); ell];
    for _ in 0..plan.s {
        let x = stream.next_sample()?;
        let j = locate(&partition, x)?;
        if partition.get(j).is_singleton() {
            continue;
        }
        let st = &mut state[j];
        if st.stored_len < plan.s1 {
            ledger.store_samples(1)?;
            *st.stored.entry(x).or_insert(0) += 1;
            st.stored_len += 1;
        } else if st.observed < plan.s2 {
            st.collisions += st.stored.get(&x).copied().unwrap_or(0);
            st.observed += 1;
            if st.observed == plan.s2 {
                ledger.release_samples(st.stored_len);
                st.stored = HashMap::new();
            }
        }
    }

    let c2 = cfg.c("stream.gate");
    let mut flagged = Vec::new();
    for (j, st) in state.iter().enumerate() {
        let iv = partition.get(j);
        if iv.is_singleton() {
            continue;
        }
        let stats = CollisionStats {
            interval: iv,
            stored: st.stored_len,
            observed: st.observed,
            collisions: st.collisions,
        };
        if classify_bipartite(&stats, eps, ThresholdMode::Monotone, c2) == Classification::FarFromUniform {
            flagged.push(FlaggedInterval::new(iv, reduced.weights()[j], stats.bipartite_rate()));
        }
    }
    for st in &state {
        if st.observed < plan.s2 {
            ledger.release_samples(st.stored_len);
        }
    }
    ledger.release_counters(tallies + ell as u64);
    let decision = decide(&partition, &reduced, &flagged, eps)?;
    Ok(Verdict {
        decision,
        samples: stream.consumed() - start,
        cond_queries: 0,
        peak_bits: ledger.peak(),
        flagged_intervals: flagged,
    })
}
