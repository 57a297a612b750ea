//! Identity testing against an explicit reference with SAMP and pair
//! conditional access, keeping SAMP frequencies in a CountMin sketch.

use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use super::compare::{compare, CompareResult};
use super::{count, Decision, TesterConfig, Verdict, Window};
use crate::cms::{dimensions, CountMinSketch};
use crate::collision::loglog;
use crate::dist::ExplicitDistribution;
use crate::error::{Error, Result};
use crate::oracles::{derive_seed, rng_from_seed, PcondOracle, SampleSource};
use crate::partition::bucketize;
use crate::profiles::Constants;

/// `(ln n sqrt(lnln n)) / eps <= m <= ln^2 n / eps`, each end scaled.
pub fn pcond_window(n: usize, eps: f64, constants: &Constants) -> Window {
    let ln = (n as f64).ln().max(1.0);
    Window {
        lo: constants.get("pcond.window_lo") * ln * loglog(n).sqrt() / eps,
        hi: constants.get("pcond.window_hi") * ln * ln / eps,
    }
}

/// Parameters the tester derives before touching any stream.
#[derive(Debug, Clone, PartialEq)]
pub struct PcondSchedule {
    pub m: u64,
    /// SAMP points fed to the sketch.
    pub sketch_samples: u64,
    pub sketch_eps: f64,
    pub sketch_width: usize,
    pub sketch_depth: usize,
    /// Reference points, and stream points drawn per reference point.
    pub points: u64,
    /// Number of weight buckets used in the compare accuracy.
    pub ell: usize,
    pub eta: f64,
    /// Ledger capacity: `slack * m / eps`.
    pub budget_bits: u64,
}

impl PcondSchedule {
    /// SAMP draws consumed by a run that reaches the end.
    pub fn total_samples(&self) -> u64 {
        self.sketch_samples + self.points * self.points
    }
}

pub fn pcond_schedule(dstar: &ExplicitDistribution, cfg: &TesterConfig) -> Result<PcondSchedule> {
    cfg.validate()?;
    let n = dstar.n();
    let eps = cfg.eps;
    let m = pcond_window(n, eps, &cfg.constants).resolve(cfg.m)?;
    let ln = (n as f64).ln().max(1.0);
    let sketch_samples = count(
        cfg.c("pcond.samples") * ln * ln * loglog(n) / (m as f64 * eps * eps),
        "sketch sample count",
    )?;
    let sketch_eps = (cfg.c("pcond.sketch") * eps / m as f64).min(1.0);
    let (sketch_width, sketch_depth) = dimensions(sketch_eps, 0.01)?;
    let eta = eps / 6.0;
    let ell = bucketize(dstar, eta)?.top().max(1);
    let points = count(cfg.c("pcond.points") * ell as f64 / eps, "reference point count")?;
    Ok(PcondSchedule {
        m,
        sketch_samples,
        sketch_eps,
        sketch_width,
        sketch_depth,
        points,
        ell,
        eta,
        budget_bits: (cfg.slack * m as f64 / eps).floor() as u64,
    })
}

/// Accepts when `D = D*` and rejects when `d_TV(D, D*) >= eps`, each with
/// probability at least 2/3 under calibrated constants.
///
/// Phase one streams SAMP points into a CountMin sketch and rejects if some
/// weight bucket of `D*` is visibly mis-weighted. Phase two draws reference
/// points `y` from `D*`; for each it streams fresh points `z` and, on pairs
/// whose reference weights are within a factor 2, compares `D(y) / D(z)`
/// with the reference ratio through pair queries.
pub fn pcond_identity_streaming(
    samp: &mut dyn SampleSource,
    pcond: &mut PcondOracle,
    dstar: &ExplicitDistribution,
    cfg: &TesterConfig,
) -> Result<Verdict> {
    let n = dstar.n();
    if samp.n() != n || pcond.n() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: if samp.n() != n { samp.n() } else { pcond.n() },
        });
    }
    let plan = pcond_schedule(dstar, cfg)?;
    let eps = cfg.eps;
    let mut ledger = crate::oracles::MemoryLedger::new(plan.budget_bits, n);
    let start = samp.consumed();
    let cond_start = pcond.cond_queries();
    let finish = |decision: Decision,
                  samp: &dyn SampleSource,
                  pcond: &PcondOracle,
                  ledger: &crate::oracles::MemoryLedger| Verdict {
        decision,
        samples: samp.consumed() - start,
        cond_queries: pcond.cond_queries() - cond_start,
        peak_bits: ledger.peak(),
        flagged_intervals: Vec::new(),
    };

    let buckets = bucketize(dstar, plan.eta)?;
    let mut hash_rng = rng_from_seed(derive_seed(cfg.seed, 1));
    let mut sketch = CountMinSketch::with_dimensions(
        plan.sketch_width,
        plan.sketch_depth,
        n,
        &mut ledger,
        &mut hash_rng,
    )?;
    for _ in 0..plan.sketch_samples {
        sketch.update(samp.next_sample()?)?;
    }
    let s = plan.sketch_samples as f64;
    let m = plan.m as f64;
    let ln = (n as f64).ln().max(1.0);
    let dev = m.sqrt() * eps / ln;
    let upper_slack = ln * ln * loglog(n) / (eps * m * m);
    for bucket in buckets.buckets().iter().filter(|b| !b.is_empty()) {
        let estimate = sketch.query_group(bucket)? as f64 / s;
        let reference: f64 = bucket.iter().map(|&x| dstar.prob(x)).sum();
        if estimate < reference - dev || estimate > reference + dev + upper_slack {
            sketch.free(&mut ledger);
            return Ok(finish(Decision::Reject, samp, pcond, &ledger));
        }
    }
    sketch.free(&mut ledger);

    let alias = WeightedAliasIndex::new(dstar.pmf().to_vec())
        .map_err(|e| Error::InvalidDistribution(format!("cannot sample reference: {e}")))?;
    let mut ref_rng = rng_from_seed(derive_seed(cfg.seed, 2));
    ledger.store_samples(plan.points)?;
    let ys: Vec<usize> = (0..plan.points).map(|_| alias.sample(&mut ref_rng) + 1).collect();
    let ell = plan.ell as f64;
    let cmp_eta = plan.eta / (4.0 * ell);
    let cmp_delta = (1.0 / (10.0 * (plan.points as f64).powi(2))).min(0.5);
    let cutoff = 1.0 - plan.eta / (2.0 * ell);
    let c_queries = cfg.c("compare.queries");
    let mut decision = Decision::Accept;
    'outer: for &y in &ys {
        for _ in 0..plan.points {
            let z = samp.next_sample()?;
            let (py, pz) = (dstar.prob(y), dstar.prob(z));
            if y == z || pz == 0.0 {
                continue;
            }
            let ratio = py / pz;
            if !(0.5..=2.0).contains(&ratio) {
                continue;
            }
            // Two query counters live only for the duration of the call.
            ledger.store_counters(2)?;
            let result = compare(pcond, z, y, cmp_eta, 2.0, cmp_delta, c_queries)?;
            ledger.release_counters(2);
            let low = match result {
                CompareResult::Low => true,
                CompareResult::Ratio(rho) => rho < cutoff * ratio,
                CompareResult::High => false,
            };
            if low {
                decision = Decision::Reject;
                break 'outer;
            }
        }
    }
    ledger.release_samples(plan.points);
    Ok(finish(decision, samp, pcond, &ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::SampleStream;

    #[test]
    fn point_mass_accepts() {
        let d = ExplicitDistribution::point_mass(8, 3).unwrap();
        let c = Constants::defaults()
            .with("pcond.sketch", 1e4)
            .unwrap()
            .with("pcond.window_hi", 100.0)
            .unwrap();
        let cfg = TesterConfig::new(0.5).unwrap().with_constants(c);
        let mut samp = SampleStream::new(&d, 1).unwrap();
        let mut pc = PcondOracle::new(&d, 2);
        let v = pcond_identity_streaming(&mut samp, &mut pc, &d, &cfg).unwrap();
        assert!(v.accepted());
        assert_eq!(v.cond_queries, 0);
    }

    #[test]
    fn budget_outside_window_consumes_nothing() {
        let d = ExplicitDistribution::uniform(256).unwrap();
        let cfg = TesterConfig::new(0.25).unwrap().with_m(1);
        let mut samp = SampleStream::new(&d, 1).unwrap();
        let mut pc = PcondOracle::new(&d, 2);
        assert!(matches!(
            pcond_identity_streaming(&mut samp, &mut pc, &d, &cfg),
            Err(Error::Config(_))
        ));
        assert_eq!(samp.consumed(), 0);
    }
}
