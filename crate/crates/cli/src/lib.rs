//! Experiment runner behind the `streamdist` binary: seeded trials of a
//! tester on an instance, aggregated into a JSON report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use streamdist::instance::{DistributionSpec, GeneratorSpec};
use streamdist::oracles::derive_seed;
use streamdist::testers::{
    assess_schedule, closeness_monotone_streaming, collision_monotonicity, collision_schedule,
    bipartite_collision_monotonicity, fine_partition_samples, identity_monotone_streaming,
    learn_decomposable_streaming, learner_r, pcond_identity_streaming, pcond_schedule,
    streaming_monotonicity, streaming_schedule, test_decomposable_property,
    EmpiricalClosenessBaseline, EmpiricalIdentityBaseline, LEARNER_C,
};
use streamdist::{
    distance_to_monotone, flattened_distance_certificate, l2_norm_sq, tv_distance, Constants,
    ExplicitDistribution, PcondOracle, SampleStream, TesterConfig, Verdict,
};
use thiserror::Error;

/// Version of the report and instance layouts.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl From<streamdist::Error> for CliError {
    fn from(e: streamdist::Error) -> Self {
        match e {
            streamdist::Error::Config(msg) => CliError::Config(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TesterKind {
    /// Monotone identity through the reduced distribution.
    Identity,
    /// Monotone closeness; the second source is the reference.
    Closeness,
    /// Identity with pair-conditional queries.
    Pcond,
    /// Pairwise-collision monotonicity.
    Collision,
    /// Bipartite-collision monotonicity.
    Bipartite,
    /// Single-pass monotonicity within a memory budget.
    Streaming,
    /// Decomposable learner; the record carries the TV to the source.
    Learn,
    /// Decomposable property tester with the monotone class.
    DecomposableMonotone,
}

impl TesterKind {
    pub fn name(self) -> &'static str {
        match self {
            TesterKind::Identity => "identity",
            TesterKind::Closeness => "closeness",
            TesterKind::Pcond => "pcond",
            TesterKind::Collision => "collision",
            TesterKind::Bipartite => "bipartite",
            TesterKind::Streaming => "streaming",
            TesterKind::Learn => "learn",
            TesterKind::DecomposableMonotone => "decomposable-monotone",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub tester: TesterKind,
    pub instance: DistributionSpec,
    /// Reference for identity, closeness and pcond; the instance itself when absent.
    pub reference: Option<DistributionSpec>,
    pub trials: u64,
    pub eps: f64,
    pub m: Option<u64>,
    /// Decomposition size for the learner; `n` when absent.
    pub l: Option<usize>,
    /// Profile name or path of a JSON constants file.
    pub constants: String,
    /// Per-key overrides applied on top of the profile.
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    #[serde(default)]
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(tester: TesterKind, instance: DistributionSpec, eps: f64) -> Self {
        ExperimentConfig {
            tester,
            instance,
            reference: None,
            trials: 1,
            eps,
            m: None,
            l: None,
            constants: "default".into(),
            overrides: BTreeMap::new(),
            seed: 0,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub verdict: Option<Verdict>,
    /// Exact TV between the learned view and the source (learner only).
    pub tv_to_source: Option<f64>,
    /// Set when the trial failed, e.g. on a budget overrun.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub tester: TesterKind,
    pub n: usize,
    pub eps: f64,
    pub m: Option<u64>,
    pub trials: u64,
    pub seed: u64,
    pub constants_source: String,
    pub constants: Constants,
    pub accepts: u64,
    /// `accepts / trials`; failed trials count as non-accepting.
    pub accept_rate: f64,
    pub failed_trials: u64,
    pub mean_samples: f64,
    pub max_samples: u64,
    pub mean_peak_bits: f64,
    pub max_peak_bits: u64,
    pub wall_clock_secs: f64,
    pub records: Vec<TrialRecord>,
}

struct Prepared {
    source: ExplicitDistribution,
    reference: ExplicitDistribution,
    base: TesterConfig,
    l: usize,
}

fn prepare(cfg: &ExperimentConfig) -> CliResult<Prepared> {
    if cfg.trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    let source = cfg.instance.materialize()?;
    let reference = match &cfg.reference {
        Some(r) => r.materialize()?,
        None => source.clone(),
    };
    if reference.n() != source.n() {
        return Err(CliError::Config(format!(
            "instance has n = {} but reference has n = {}",
            source.n(),
            reference.n()
        )));
    }
    let mut constants = Constants::resolve(&cfg.constants)?;
    for (k, &v) in &cfg.overrides {
        constants.set(k, v)?;
    }
    let mut base = TesterConfig::new(cfg.eps)?.with_constants(constants);
    base.m = cfg.m;
    base.seed = cfg.seed;
    base.validate()?;
    let n = source.n();
    let l = cfg.l.unwrap_or(n);
    match cfg.tester {
        TesterKind::Identity | TesterKind::Closeness => {}
        TesterKind::Pcond => {
            pcond_schedule(&reference, &base)?;
        }
        TesterKind::Collision => {
            collision_schedule(n, &base, false)?;
        }
        TesterKind::Bipartite => {
            collision_schedule(n, &base, true)?;
        }
        TesterKind::Streaming => {
            streaming_schedule(n, &base)?;
        }
        TesterKind::Learn | TesterKind::DecomposableMonotone => {
            if l == 0 {
                return Err(CliError::Config("L must be positive".into()));
            }
            assess_schedule(n, LEARNER_C, learner_r(l, cfg.eps), &base)?;
            fine_partition_samples(l, &base)?;
        }
    }
    Ok(Prepared {
        source,
        reference,
        base,
        l,
    })
}

fn run_trial(kind: TesterKind, p: &Prepared, trial: u64, seed: u64) -> TrialRecord {
    let mut cfg = p.base.clone();
    cfg.seed = seed;
    let mut tv = None;
    let outcome = (|| -> streamdist::Result<Verdict> {
        let mut stream = SampleStream::new(&p.source, derive_seed(seed, 1))?;
        match kind {
            TesterKind::Identity => {
                let t = EmpiricalIdentityBaseline {
                    c_samples: cfg.constants.get("identity.samples"),
                };
                identity_monotone_streaming(&mut stream, &p.reference, &cfg, &t)
            }
            TesterKind::Closeness => {
                let mut second = SampleStream::new(&p.reference, derive_seed(seed, 2))?;
                let t = EmpiricalClosenessBaseline {
                    c_samples: cfg.constants.get("closeness.samples"),
                };
                closeness_monotone_streaming(&mut stream, &mut second, &cfg, &t)
            }
            TesterKind::Pcond => {
                let mut oracle = PcondOracle::new(&p.source, derive_seed(seed, 3));
                pcond_identity_streaming(&mut stream, &mut oracle, &p.reference, &cfg)
            }
            TesterKind::Collision => collision_monotonicity(&mut stream, &cfg),
            TesterKind::Bipartite => bipartite_collision_monotonicity(&mut stream, &cfg),
            TesterKind::Streaming => streaming_monotonicity(&mut stream, &cfg),
            TesterKind::Learn => {
                let out = learn_decomposable_streaming(&mut stream, p.l, &cfg)?;
                if let Some(view) = &out.view {
                    tv = Some(view.tv_to(&p.source)?);
                }
                Ok(out.verdict)
            }
            TesterKind::DecomposableMonotone => {
                test_decomposable_property(&mut stream, &distance_to_monotone, p.l, &cfg)
            }
        }
    })();
    match outcome {
        Ok(v) => TrialRecord {
            trial,
            seed,
            verdict: Some(v),
            tv_to_source: tv,
            error: None,
        },
        Err(e) => TrialRecord {
            trial,
            seed,
            verdict: None,
            tv_to_source: None,
            error: Some(e.to_string()),
        },
    }
}

/// Runs `cfg.trials` independent trials with sub-seeds `seed + i`. The
/// records do not depend on the number of worker threads.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<ExperimentReport> {
    let prepared = prepare(cfg)?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let records: Vec<TrialRecord> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(cfg.tester, &prepared, i, cfg.seed.wrapping_add(i)))
            .collect()
    });

    let done: Vec<&Verdict> = records.iter().filter_map(|r| r.verdict.as_ref()).collect();
    let accepts = done.iter().filter(|v| v.accepted()).count() as u64;
    let mean = |f: fn(&Verdict) -> u64| {
        if done.is_empty() {
            0.0
        } else {
            done.iter().map(|v| f(v) as f64).sum::<f64>() / done.len() as f64
        }
    };
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        tester: cfg.tester,
        n: prepared.source.n(),
        eps: cfg.eps,
        m: cfg.m,
        trials: cfg.trials,
        seed: cfg.seed,
        constants_source: cfg.constants.clone(),
        constants: prepared.base.constants.clone(),
        accepts,
        accept_rate: accepts as f64 / cfg.trials as f64,
        failed_trials: cfg.trials - done.len() as u64,
        mean_samples: mean(|v| v.samples),
        max_samples: done.iter().map(|v| v.samples).max().unwrap_or(0),
        mean_peak_bits: mean(|v| v.peak_bits),
        max_peak_bits: done.iter().map(|v| v.peak_bits).max().unwrap_or(0),
        wall_clock_secs: started.elapsed().as_secs_f64(),
        records,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per trial, for plotting.
pub fn report_to_csv(report: &ExperimentReport) -> String {
    let mut out =
        String::from("trial,seed,decision,samples,cond_queries,peak_bits,flagged,tv_to_source,error\n");
    for r in &report.records {
        let (decision, samples, cq, peak, flagged) = match &r.verdict {
            Some(v) => (
                if v.accepted() { "accept" } else { "reject" },
                v.samples.to_string(),
                v.cond_queries.to_string(),
                v.peak_bits.to_string(),
                v.flagged_intervals.len().to_string(),
            ),
            None => ("failed", String::new(), String::new(), String::new(), String::new()),
        };
        let tv = r.tv_to_source.map(|t| t.to_string()).unwrap_or_default();
        let err = r.error.as_deref().map(csv_field).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{decision},{samples},{cq},{peak},{flagged},{tv},{err}",
            r.trial, r.seed
        );
    }
    out
}

/// Materializes a generator spec.
pub fn gen_instance(spec: &GeneratorSpec) -> CliResult<ExplicitDistribution> {
    Ok(spec.materialize()?)
}

/// Summary statistics of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Description {
    pub n: usize,
    pub l2_norm_sq: f64,
    pub tv_to_uniform: f64,
    pub distance_to_monotone: f64,
    /// TV to the flattening over the oblivious partition with parameter 0.1.
    pub birge_flattening_distance: f64,
}

pub fn describe(p: &ExplicitDistribution) -> CliResult<Description> {
    let uniform = ExplicitDistribution::uniform(p.n())?;
    Ok(Description {
        n: p.n(),
        l2_norm_sq: l2_norm_sq(p),
        tv_to_uniform: tv_distance(p, &uniform)?,
        distance_to_monotone: distance_to_monotone(p),
        birge_flattening_distance: flattened_distance_certificate(p, 0.1)?,
    })
}

/// Reads a distribution file: an explicit pmf or a generator spec.
pub fn read_distribution(path: &std::path::Path) -> CliResult<DistributionSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    Ok(DistributionSpec::from_json(&text)?)
}
