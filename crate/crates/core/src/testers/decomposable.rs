//! Learning and testing decomposable distributions: pull a fine partition
//! from a few samples, check with bipartite collisions that most of the mass
//! sits on near-flat intervals, and return the learned flattening.

use std::collections::{BTreeSet, HashMap};

use super::{count, Decision, FlaggedInterval, TesterConfig, Verdict, Window};
use crate::cms::CountMinSketch;
use crate::collision::{classify_bipartite, Classification, CollisionStats, ThresholdMode};
use crate::dist::{ExplicitDistribution, FlattenedView, ReducedDistribution};
use crate::error::{Error, Result};
use crate::oracles::{derive_seed, rng_from_seed, MemoryLedger, SampleSource};
use crate::partition::{fine_partition, IntervalPartition};
use crate::profiles::Constants;

/// Size bound used by the learner: intervals wider than `n / c` are never
/// assessed.
pub const LEARNER_C: f64 = 20.0;

/// `ln n / eps^4 <= m <= sqrt(n ln n) / eps^3`, each end scaled.
pub fn assess_window(n: usize, eps: f64, constants: &Constants) -> Window {
    let ln = (n as f64).ln().max(1.0);
    Window {
        lo: constants.get("assess.window_lo") * ln / eps.powi(4),
        hi: constants.get("assess.window_hi") * (n as f64 * ln).sqrt() / eps.powi(3),
    }
}

/// Plan of [`assess_partition_streaming`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssessSchedule {
    pub m: u64,
    /// Draws fed to the weight sketch.
    pub t: u64,
    pub rounds: u64,
    /// Draws per round, after the selector draw.
    pub s: u64,
    pub s1: u64,
    pub s2: u64,
    pub budget_bits: u64,
}

impl AssessSchedule {
    pub fn total_samples(&self) -> u64 {
        self.t + self.rounds * (1 + self.s)
    }
}

pub fn assess_schedule(n: usize, c: f64, r: f64, cfg: &TesterConfig) -> Result<AssessSchedule> {
    cfg.validate()?;
    if !(c >= 1.0 && r >= 1.0) {
        return Err(Error::Config(format!("need c >= 1 and r >= 1, got c = {c}, r = {r}")));
    }
    let eps = cfg.eps;
    let m = assess_window(n, eps, &cfg.constants).resolve(cfg.m)?;
    let ln = (n as f64).ln().max(1.0);
    let (mf, nf) = (m as f64, n as f64);
    Ok(AssessSchedule {
        m,
        t: count(cfg.c("assess.T") * r * r * r.ln().max(1.0) / eps.powi(4), "sketch sample count")?,
        rounds: count(cfg.c("assess.rounds") * c / eps, "round count")?,
        s: count(cfg.c("assess.S") * nf * r / (mf * eps.powi(8)), "round sample count")?,
        s1: count(cfg.c("assess.S1") * mf / ln, "stored sample count")?,
        s2: count(cfg.c("assess.S2") * nf / (mf * eps.powi(5)), "compared sample count")?,
        budget_bits: (cfg.slack * mf).floor() as u64,
    })
}

/// Result of assessing a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct AssessOutcome {
    pub verdict: Verdict,
    /// Rounds whose interval was flagged, counted with multiplicity.
    pub bad: u64,
    pub rounds: u64,
}

struct AssessRun {
    outcome: AssessOutcome,
    reduced: Option<ReducedDistribution>,
}

/// Runs the assessment against a caller-owned ledger. With `learn` set, one
/// counter per interval is kept during the sketch phase and the resulting
/// empirical interval masses are returned.
fn assess_inner(
    stream: &mut dyn SampleSource,
    partition: &IntervalPartition,
    c: f64,
    r: f64,
    cfg: &TesterConfig,
    plan: &AssessSchedule,
    ledger: &mut MemoryLedger,
    learn: bool,
) -> Result<AssessRun> {
    let n = partition.n();
    let eps = cfg.eps;
    let start = stream.consumed();
    let locate = |x: usize| {
        partition
            .locate(x)
            .ok_or_else(|| Error::InvalidArgument(format!("sample {x} outside [1, {n}]")))
    };

    let mut hash_rng = rng_from_seed(derive_seed(cfg.seed, 11));
    let mut sketch = CountMinSketch::new(eps.min(0.99), cfg.delta, n, ledger, &mut hash_rng)?;
    let mut counts = if learn {
        ledger.store_counters(partition.len() as u64)?;
        Some(vec![0u64; partition.len()])
    } else {
        None
    };
    for _ in 0..plan.t {
        let x = stream.next_sample()?;
        sketch.update(x)?;
        if let Some(cs) = counts.as_mut() {
            cs[locate(x)?] += 1;
        }
    }

    let max_len = n as f64 / c;
    let min_weight = eps / r - eps * eps / r;
    let c2 = cfg.c("assess.gate");
    let mut bad = 0u64;
    let mut flagged = Vec::new();
    for _ in 0..plan.rounds {
        let iv = partition.get(locate(stream.next_sample()?)?);
        let eligible = !iv.is_singleton() && iv.len() as f64 <= max_len && {
            let group: Vec<usize> = (iv.lo..=iv.hi).collect();
            sketch.query_group(&group)? as f64 / plan.t as f64 >= min_weight
        };
        if !eligible {
            for _ in 0..plan.s {
                stream.next_sample()?;
            }
            continue;
        }
        ledger.store_counters(2)?;
        let mut stored: HashMap<usize, u64> = HashMap::new();
        let mut stats = CollisionStats::bipartite(iv, &[], &[]);
        for _ in 0..plan.s {
            let x = stream.next_sample()?;
            if !iv.contains(x) {
                continue;
            }
            if stats.stored < plan.s1 {
                ledger.store_samples(1)?;
                *stored.entry(x).or_insert(0) += 1;
                stats.stored += 1;
            } else if stats.observed < plan.s2 {
                stats.collisions += stored.get(&x).copied().unwrap_or(0);
                stats.observed += 1;
            }
        }
        ledger.release_samples(stats.stored);
        ledger.release_counters(2);
        if classify_bipartite(&stats, eps, ThresholdMode::Decomposable, c2) == Classification::FarFromUniform {
            bad += 1;
            let weight = sketch.query_group(&(iv.lo..=iv.hi).collect::<Vec<_>>())? as f64 / plan.t as f64;
            flagged.push(FlaggedInterval::new(iv, weight, stats.bipartite_rate()));
        }
    }
    sketch.free(ledger);
    let reduced = match counts {
        Some(cs) => {
            ledger.release_counters(partition.len() as u64);
            Some(ReducedDistribution::from_counts(&cs)?)
        }
        None => None,
    };
    let decision = Decision::from_accept(bad as f64 <= 4.0 * eps * plan.rounds as f64);
    Ok(AssessRun {
        outcome: AssessOutcome {
            verdict: Verdict {
                decision,
                samples: stream.consumed() - start,
                cond_queries: 0,
                peak_bits: ledger.peak(),
                flagged_intervals: flagged,
            },
            bad,
            rounds: plan.rounds,
        },
        reduced,
    })
}

/// Checks that a fine partition is mostly made of near-flat intervals.
///
/// Accepts w.p. at least 2/3 when intervals with `bias <= eps/100` carry
/// mass at least `1 - eps`; rejects w.p. at least 2/3 when intervals whose
/// conditional is `eps`-far from uniform carry mass at least `7 eps`. Both
/// need `c eta + gamma <= eps` for the partition's fineness.
pub fn assess_partition_streaming(
    stream: &mut dyn SampleSource,
    partition: &IntervalPartition,
    c: f64,
    r: f64,
    cfg: &TesterConfig,
) -> Result<AssessOutcome> {
    let n = partition.n();
    if stream.n() != n {
        return Err(Error::DimensionMismatch { left: stream.n(), right: n });
    }
    let plan = assess_schedule(n, c, r, cfg)?;
    let mut ledger = MemoryLedger::new(plan.budget_bits, n);
    Ok(assess_inner(stream, partition, c, r, cfg, &plan, &mut ledger, false)?.outcome)
}

/// Draws used to pull an `(eps / 2000 L, eps / 2000)`-fine partition:
/// `(ln(1/gamma) + ln(1/delta)) / eta`, scaled.
pub fn fine_partition_samples(l: usize, cfg: &TesterConfig) -> Result<u64> {
    let eta = cfg.eps / (2000.0 * l as f64);
    let gamma = cfg.eps / 2000.0;
    count(
        cfg.c("fine.k") * ((1.0 / gamma).ln() + (1.0 / cfg.delta).ln()) / eta,
        "partition sample count",
    )
}

/// Interval-count parameter of the learner, `10^5 L ln(1/eps) / eps`, at
/// least 1.
pub fn learner_r(l: usize, eps: f64) -> f64 {
    (1e5 * l as f64 * (1.0 / eps).ln() / eps).max(1.0)
}

/// Learner output.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    /// Accept when the learned view is returned.
    pub verdict: Verdict,
    pub view: Option<FlattenedView>,
    /// Number of intervals in the pulled partition.
    pub intervals: usize,
}

/// Learns a `(eps/2000, L)`-decomposable distribution to TV `eps` within
/// `slack * m` bits, or rejects.
///
/// The pulled partition is held as its distinct sample points. The learned
/// interval masses come from one counter per interval kept during the
/// sketch phase of the assessment.
pub fn learn_decomposable_streaming(
    stream: &mut dyn SampleSource,
    l: usize,
    cfg: &TesterConfig,
) -> Result<LearnOutcome> {
    cfg.validate()?;
    if l == 0 {
        return Err(Error::Config("L must be positive".into()));
    }
    let n = stream.n();
    let r = learner_r(l, cfg.eps);
    let plan = assess_schedule(n, LEARNER_C, r, cfg)?;
    let k0 = fine_partition_samples(l, cfg)?;
    let mut ledger = MemoryLedger::new(plan.budget_bits, n);
    let start = stream.consumed();

    let mut points = BTreeSet::new();
    for _ in 0..k0 {
        if points.insert(stream.next_sample()?) {
            ledger.store_samples(1)?;
        }
    }
    let points: Vec<usize> = points.into_iter().collect();
    let partition = fine_partition(&points, n)?;
    let run = assess_inner(stream, &partition, LEARNER_C, r, cfg, &plan, &mut ledger, true)?;
    ledger.release_samples(points.len() as u64);

    let mut verdict = run.outcome.verdict;
    verdict.samples = stream.consumed() - start;
    verdict.peak_bits = ledger.peak();
    let view = match (verdict.decision, run.reduced) {
        (Decision::Accept, Some(reduced)) => Some(FlattenedView::new(partition.clone(), reduced)?),
        _ => None,
    };
    Ok(LearnOutcome {
        verdict,
        view,
        intervals: partition.len(),
    })
}

/// Tests membership in a class through the learner: rejects when the learner
/// rejects, otherwise accepts iff the learned distribution is within `eps`
/// of the class as measured by `distance_to_class`.
pub fn test_decomposable_property(
    stream: &mut dyn SampleSource,
    distance_to_class: &dyn Fn(&ExplicitDistribution) -> f64,
    l: usize,
    cfg: &TesterConfig,
) -> Result<Verdict> {
    let out = learn_decomposable_streaming(stream, l, cfg)?;
    let mut verdict = out.verdict;
    if let Some(view) = out.view {
        let d = distance_to_class(&view.to_distribution());
        verdict.decision = Decision::from_accept(d <= cfg.eps);
    }
    Ok(verdict)
}
