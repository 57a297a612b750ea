//! End-to-end testers and learners.
//!
//! Each tester consumes one or more single-pass streams, charges everything it
//! keeps to a [`MemoryLedger`](crate::oracles::MemoryLedger) and reports a
//! [`Verdict`]. Sample counts, gates and memory windows are the asymptotic
//! expressions of the analysis scaled by named constants from
//! [`Constants`](crate::profiles::Constants).

mod compare;
mod decomposable;
mod identity;
mod monotonicity;
mod pcond;

pub use compare::{compare, compare_queries, CompareResult};
pub use decomposable::{
    assess_partition_streaming, assess_schedule, assess_window, fine_partition_samples,
    learn_decomposable_streaming, learner_r, test_decomposable_property, AssessOutcome, AssessSchedule,
    LearnOutcome, LEARNER_C,
};
pub use identity::{
    closeness_monotone_streaming, identity_monotone_streaming, reduced_closeness_baseline,
    reduced_identity_baseline, EmpiricalClosenessBaseline, EmpiricalIdentityBaseline,
    ReducedClosenessTester, ReducedIdentityTester,
};
pub use monotonicity::{
    bipartite_collision_monotonicity, collision_monotonicity, collision_schedule,
    streaming_monotonicity, streaming_schedule, streaming_window, CollisionSchedule,
    StreamingSchedule,
};
pub use pcond::{pcond_identity_streaming, pcond_schedule, pcond_window, PcondSchedule};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Interval;
use crate::profiles::Constants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn accepted(self) -> bool {
        self == Decision::Accept
    }

    pub fn from_accept(accept: bool) -> Self {
        if accept {
            Decision::Accept
        } else {
            Decision::Reject
        }
    }
}

/// Diagnostic record of an interval flagged as far from uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlaggedInterval {
    pub lo: usize,
    pub hi: usize,
    /// Estimated interval mass.
    pub weight: f64,
    /// Observed collision rate.
    pub rate: f64,
}

impl FlaggedInterval {
    pub fn new(iv: Interval, weight: f64, rate: f64) -> Self {
        FlaggedInterval {
            lo: iv.lo,
            hi: iv.hi,
            weight,
            rate,
        }
    }
}

/// Outcome of one tester run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: Decision,
    /// SAMP draws consumed, summed over all streams.
    pub samples: u64,
    /// Pair-conditional queries issued.
    pub cond_queries: u64,
    pub peak_bits: u64,
    pub flagged_intervals: Vec<FlaggedInterval>,
}

impl Verdict {
    pub fn accepted(&self) -> bool {
        self.decision.accepted()
    }
}

/// Parameters shared by all testers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TesterConfig {
    pub eps: f64,
    /// Memory budget in bits; `None` selects the midpoint of the tester's
    /// window (or no budget for testers without one).
    pub m: Option<u64>,
    pub constants: Constants,
    pub seed: u64,
    /// Factor by which peak usage may exceed `m`.
    pub slack: f64,
    /// Failure probability for sketches and partition pulling.
    pub delta: f64,
}

pub const DEFAULT_SLACK: f64 = 4.0;
pub const DEFAULT_DELTA: f64 = 0.1;

impl TesterConfig {
    pub fn new(eps: f64) -> Result<Self> {
        let cfg = TesterConfig {
            eps,
            m: None,
            constants: Constants::defaults(),
            seed: 0,
            slack: DEFAULT_SLACK,
            delta: DEFAULT_DELTA,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_m(mut self, m: u64) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_constants(mut self, constants: Constants) -> Self {
        self.constants = constants;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::Config(format!("eps must lie in (0, 1], got {}", self.eps)));
        }
        if !(self.slack >= 1.0 && self.slack.is_finite()) {
            return Err(Error::Config(format!("slack must be at least 1, got {}", self.slack)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.m == Some(0) {
            return Err(Error::Config("memory budget must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn c(&self, key: &str) -> f64 {
        self.constants.get(key)
    }
}

/// Admissible range of the memory budget `m`, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn midpoint(&self) -> u64 {
        ((self.lo + self.hi) / 2.0).round() as u64
    }

    pub fn contains(&self, m: u64) -> bool {
        let m = m as f64;
        self.lo <= m && m <= self.hi
    }

    /// The requested budget, or the midpoint when none is given.
    pub fn resolve(&self, m: Option<u64>) -> Result<u64> {
        if !(self.lo <= self.hi) {
            return Err(Error::Config(format!(
                "memory window [{:.1}, {:.1}] is empty; adjust the window constants",
                self.lo, self.hi
            )));
        }
        let m = m.unwrap_or_else(|| self.midpoint());
        if !self.contains(m) {
            return Err(Error::Config(format!(
                "memory budget {m} bits outside the window [{:.1}, {:.1}]",
                self.lo, self.hi
            )));
        }
        Ok(m)
    }
}

/// Largest sample count a tester will schedule.
pub const MAX_SAMPLES: u64 = 50_000_000_000;

/// Rounds a scaled sample expression up to a positive count.
pub(crate) fn count(x: f64, what: &str) -> Result<u64> {
    if !x.is_finite() || x > MAX_SAMPLES as f64 {
        return Err(Error::Config(format!(
            "{what} evaluates to {x:.3e}, beyond {MAX_SAMPLES}; lower its constant"
        )));
    }
    Ok((x.ceil() as u64).max(1))
}
