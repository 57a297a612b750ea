//! Monte-Carlo behaviour of the testers under the shipped profiles, plus
//! schedule exactness and reproducibility.

mod common;

use streamdist::oracles::{derive_seed, MemoryLedger, ReplayStream};
use streamdist::testers::{
    assess_partition_streaming, assess_schedule, bipartite_collision_monotonicity,
    closeness_monotone_streaming, collision_monotonicity, collision_schedule, compare,
    fine_partition_samples, identity_monotone_streaming, learn_decomposable_streaming, learner_r,
    pcond_identity_streaming, pcond_schedule, reduced_identity_baseline, streaming_monotonicity,
    streaming_schedule, test_decomposable_property, EmpiricalClosenessBaseline,
    EmpiricalIdentityBaseline, LEARNER_C,
};
use streamdist::{
    distance_to_monotone, fine_partition, gen_monotone, gen_no_instance, tv_distance,
    CompareResult, Constants, Decision, Error, ExplicitDistribution, Interval, IntervalPartition,
    MonotoneKind, PcondOracle, SampleSource, SampleStream, TesterConfig, Verdict,
};

fn cfg(eps: f64, profile: &str) -> TesterConfig {
    TesterConfig::new(eps)
        .unwrap()
        .with_constants(Constants::profile(profile).unwrap())
}

fn geometric(n: usize, ratio: f64) -> ExplicitDistribution {
    gen_monotone(MonotoneKind::Geometric, n, ratio).unwrap()
}

fn no_instance(half_n: usize, bias: f64, seed: u64) -> ExplicitDistribution {
    let mut rng = streamdist::oracles::rng_from_seed(seed);
    gen_no_instance(half_n, bias, &mut rng).unwrap()
}

/// Fraction of `trials` seeds for which `run` accepts.
fn accept_rate(trials: u64, mut run: impl FnMut(u64) -> Verdict) -> f64 {
    (0..trials).filter(|&t| run(t).accepted()).count() as f64 / trials as f64
}

fn stream(d: &ExplicitDistribution, seed: u64) -> SampleStream {
    SampleStream::new(d, derive_seed(seed, 1)).unwrap()
}

// Compare.

fn pair(ratio: f64) -> ExplicitDistribution {
    // D(2) / D(1) = ratio.
    ExplicitDistribution::from_weights(vec![1.0, ratio]).unwrap()
}

#[test]
fn compare_equal_weights_gives_ratio_near_one() {
    let d = pair(1.0);
    let mut o = PcondOracle::new(&d, 1);
    let good = (0..200)
        .filter(|_| matches!(compare(&mut o, 1, 2, 0.1, 2.0, 0.05, 8.0).unwrap(),
            CompareResult::Ratio(r) if (0.9..=1.1).contains(&r)))
        .count();
    assert!(good as f64 / 200.0 >= 0.95, "{good}");
}

#[test]
fn compare_zero_weight_gives_low() {
    let d = ExplicitDistribution::new(vec![1.0, 0.0]).unwrap();
    let mut o = PcondOracle::new(&d, 2);
    for _ in 0..50 {
        assert_eq!(compare(&mut o, 1, 2, 0.1, 2.0, 0.05, 1.0).unwrap(), CompareResult::Low);
    }
}

#[test]
fn compare_heavy_side_gives_high_or_accurate_ratio() {
    let d = pair(5.0);
    let mut o = PcondOracle::new(&d, 3);
    let good = (0..200)
        .filter(|_| match compare(&mut o, 1, 2, 0.1, 2.0, 0.05, 8.0).unwrap() {
            CompareResult::High => true,
            CompareResult::Ratio(r) => (4.5..=5.5).contains(&r),
            CompareResult::Low => false,
        })
        .count();
    assert!(good as f64 / 200.0 >= 0.95, "{good}");
}

#[test]
fn compare_rejects_identical_points() {
    let d = pair(1.0);
    let mut o = PcondOracle::new(&d, 4);
    assert!(matches!(compare(&mut o, 1, 1, 0.1, 2.0, 0.05, 1.0), Err(Error::InvalidArgument(_))));
}

#[test]
fn compare_medians_follow_the_true_ratio() {
    let mut last = f64::NEG_INFINITY;
    for (i, &ratio) in [0.25, 0.5, 1.0, 2.0, 4.0].iter().enumerate() {
        let d = pair(ratio);
        let mut o = PcondOracle::new(&d, 10 + i as u64);
        let mut values: Vec<f64> = (0..500)
            .map(|_| match compare(&mut o, 1, 2, 0.1, 2.0, 0.05, 1.0).unwrap() {
                CompareResult::Ratio(r) => r,
                CompareResult::High => f64::INFINITY,
                CompareResult::Low => 0.0,
            })
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = values[250];
        assert!(median >= last, "median {median} at ratio {ratio} after {last}");
        last = median;
    }
}

// Identity and closeness through the oblivious reduction.

#[test]
fn reduced_baseline_examples() {
    let target = ExplicitDistribution::uniform(10).unwrap();
    let disjoint = ExplicitDistribution::new(
        [vec![0.0; 5], vec![0.2; 5]].concat(),
    )
    .unwrap();
    let (mut acc, mut rej) = (0, 0);
    for t in 0..100 {
        let mut l = MemoryLedger::unbounded(10);
        let mut s = stream(&target, t);
        if reduced_identity_baseline(&mut s, &target, 0.2, 4.0, &mut l).unwrap().accepted() {
            acc += 1;
        }
        let mut s = stream(&disjoint, t);
        if !reduced_identity_baseline(&mut s, &target, 0.2, 4.0, &mut l).unwrap().accepted() {
            rej += 1;
        }
        assert_eq!(l.used(), 0);
    }
    assert!(acc >= 90 && rej >= 90, "{acc} {rej}");
    let one = ExplicitDistribution::uniform(1).unwrap();
    let mut s = ReplayStream::new(1, vec![1; 10]).unwrap();
    let mut l = MemoryLedger::unbounded(1);
    assert_eq!(reduced_identity_baseline(&mut s, &one, 0.5, 1.0, &mut l).unwrap(), Decision::Accept);
}

#[test]
fn identity_accepts_the_reference_and_rejects_its_reversal() {
    let d = geometric(10_000, 0.999);
    let rev = d.reversed();
    assert!(tv_distance(&d, &rev).unwrap() >= 0.3);
    let c = cfg(0.1, "desk");
    let tester = EmpiricalIdentityBaseline { c_samples: c.constants.get("identity.samples") };
    let acc = accept_rate(100, |t| {
        identity_monotone_streaming(&mut stream(&d, t), &d, &c, &tester).unwrap()
    });
    let rej = 1.0 - accept_rate(100, |t| {
        identity_monotone_streaming(&mut stream(&rev, t), &d, &c, &tester).unwrap()
    });
    assert!(acc >= 0.6 && rej >= 0.6, "accept {acc}, reject {rej}");
    let one = ExplicitDistribution::uniform(1).unwrap();
    let v = identity_monotone_streaming(&mut stream(&one, 0), &one, &c, &tester).unwrap();
    assert!(v.accepted());
    assert!(matches!(
        identity_monotone_streaming(&mut stream(&rev, 0), &rev, &c, &tester),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn closeness_accepts_equal_sources_and_rejects_reversal() {
    let d = geometric(10_000, 0.999);
    let rev = d.reversed();
    let c = cfg(0.1, "desk");
    let tester = EmpiricalClosenessBaseline { c_samples: c.constants.get("closeness.samples") };
    let acc = accept_rate(100, |t| {
        let (mut a, mut b) = (stream(&d, t), SampleStream::new(&d, derive_seed(t, 2)).unwrap());
        closeness_monotone_streaming(&mut a, &mut b, &c, &tester).unwrap()
    });
    let rej = 1.0 - accept_rate(100, |t| {
        let (mut a, mut b) = (stream(&d, t), SampleStream::new(&rev, derive_seed(t, 2)).unwrap());
        closeness_monotone_streaming(&mut a, &mut b, &c, &tester).unwrap()
    });
    assert!(acc >= 0.6 && rej >= 0.6, "accept {acc}, reject {rej}");
    let one = ExplicitDistribution::uniform(1).unwrap();
    let (mut a, mut b) = (stream(&one, 0), stream(&one, 1));
    assert!(closeness_monotone_streaming(&mut a, &mut b, &c, &tester).unwrap().accepted());
}

// PCOND identity.

fn pcond_run(d: &ExplicitDistribution, dstar: &ExplicitDistribution, c: &TesterConfig, t: u64) -> Verdict {
    let c = c.clone().with_seed(derive_seed(t, 4));
    let mut samp = stream(d, t);
    let mut pc = PcondOracle::new(d, derive_seed(t, 3));
    pcond_identity_streaming(&mut samp, &mut pc, dstar, &c).unwrap()
}

#[test]
fn pcond_identity_examples() {
    let u = ExplicitDistribution::uniform(256).unwrap();
    let half = ExplicitDistribution::uniform_prefix(256, 128).unwrap();
    assert_eq!(tv_distance(&u, &half).unwrap(), 0.5);
    let c = cfg(0.25, "desk");
    let plan = pcond_schedule(&u, &c).unwrap();
    let mut accepted = 0;
    for t in 0..30 {
        let v = pcond_run(&u, &u, &c, t);
        assert!(v.peak_bits as f64 <= 4.0 * plan.m as f64 / 0.25);
        if v.accepted() {
            accepted += 1;
            assert_eq!(v.samples, plan.total_samples());
        }
    }
    let rej = 1.0 - accept_rate(30, |t| pcond_run(&half, &u, &c, t));
    assert!(accepted as f64 / 30.0 >= 0.6 && rej >= 0.6, "accept {accepted}/30, reject {rej}");

    let point = ExplicitDistribution::point_mass(256, 1).unwrap();
    let v = pcond_run(&point, &point, &c, 0);
    assert!(v.accepted());
    assert_eq!(v.cond_queries, 0);
}

// Monotonicity testers.

#[test]
fn pairwise_collision_tester_examples() {
    let c = cfg(0.25, "desk");
    let g = geometric(4096, 0.998);
    let plan = collision_schedule(4096, &c, false).unwrap();
    let acc = accept_rate(60, |t| {
        let v = collision_monotonicity(&mut stream(&g, t), &c).unwrap();
        assert_eq!(v.samples, plan.total_samples());
        v
    });
    assert!(acc >= 0.6, "geometric accept {acc}");
    let u = ExplicitDistribution::uniform(4096).unwrap();
    assert!(accept_rate(10, |t| collision_monotonicity(&mut stream(&u, t), &c).unwrap()) >= 0.6);

    let fine = cfg(0.03, "desk-fine");
    let far = no_instance(2048, 0.9, 5);
    assert!(distance_to_monotone(&far) >= 0.9 / 4.0);
    let rej = 1.0 - accept_rate(20, |t| collision_monotonicity(&mut stream(&far, t), &fine).unwrap());
    assert!(rej >= 0.6, "no-instance reject {rej}");
}

#[test]
fn bipartite_collision_tester_examples() {
    let c = cfg(0.25, "desk");
    let g = geometric(4096, 0.998);
    let plan = collision_schedule(4096, &c, true).unwrap();
    let acc = accept_rate(12, |t| {
        let v = bipartite_collision_monotonicity(&mut stream(&g, t), &c).unwrap();
        assert_eq!(v.samples, plan.total_samples());
        v
    });
    assert!(acc >= 0.6, "geometric accept {acc}");
    let u = ExplicitDistribution::uniform(4096).unwrap();
    assert!(accept_rate(6, |t| bipartite_collision_monotonicity(&mut stream(&u, t), &c).unwrap()) >= 0.6);

    let fine = cfg(0.03, "desk-fine");
    let far = no_instance(2048, 0.9, 5);
    let rej = 1.0 - accept_rate(12, |t| {
        bipartite_collision_monotonicity(&mut stream(&far, t), &fine).unwrap()
    });
    assert!(rej >= 0.6, "no-instance reject {rej}");
}

#[test]
fn pairwise_and_bipartite_testers_agree() {
    let c = cfg(0.25, "desk");
    let (mut a3, mut a4) = (0, 0);
    for t in 0..50u64 {
        // Half monotone, half reversed, across a spread of decay rates.
        let ratio = 0.990 + 0.0002 * t as f64;
        let g = geometric(1024, ratio);
        let d = if t % 2 == 0 { g } else { g.reversed() };
        a3 += collision_monotonicity(&mut stream(&d, t), &c).unwrap().accepted() as i32;
        a4 += bipartite_collision_monotonicity(&mut stream(&d, t), &c).unwrap().accepted() as i32;
    }
    let diff = (a3 - a4).abs() as f64 / 50.0;
    assert!(diff <= 0.15, "pairwise {a3}, bipartite {a4}");
}

#[test]
fn streaming_tester_accepts_monotone_within_budget() {
    let c = cfg(0.3, "desk");
    let n = 1 << 14;
    let g = geometric(n, 0.9995);
    let plan = streaming_schedule(n, &c).unwrap();
    let acc = accept_rate(20, |t| {
        let v = streaming_monotonicity(&mut stream(&g, t), &c).unwrap();
        assert!(v.peak_bits <= 4 * plan.m);
        assert_eq!(v.samples, plan.total_samples());
        v
    });
    assert!(acc >= 0.6, "{acc}");
}

#[test]
fn streaming_tester_rejects_budget_below_window_without_sampling() {
    let c = cfg(0.3, "desk").with_m(10);
    let g = geometric(1 << 14, 0.9995);
    let mut s = stream(&g, 0);
    assert!(matches!(streaming_monotonicity(&mut s, &c), Err(Error::Config(_))));
    assert_eq!(s.consumed(), 0);
}

// Decomposable testing and learning.

fn assess_far_constants() -> Constants {
    let mut k = Constants::profile("desk").unwrap();
    for (key, v) in [
        ("assess.T", 6.5e-6),
        ("assess.S", 5e-5),
        ("assess.S1", 1.9e-4),
        ("assess.S2", 0.05),
        ("assess.gate", 1e-3),
    ] {
        k.set(key, v).unwrap();
    }
    k
}

#[test]
fn assess_examples() {
    let n = 4096;
    // Singleton partition: nothing is ever checked.
    let c = cfg(0.25, "desk");
    let u = ExplicitDistribution::uniform(n).unwrap();
    let singletons = IntervalPartition::singletons(n).unwrap();
    let out = assess_partition_streaming(&mut stream(&u, 0), &singletons, 20.0, 100.0, &c).unwrap();
    assert!(out.verdict.accepted());
    assert_eq!(out.bad, 0);

    // Uniform source, fine partition pulled from its own samples.
    let plan = assess_schedule(n, 20.0, 100.0, &c).unwrap();
    let acc = accept_rate(60, |t| {
        let mut s = stream(&u, t);
        let pts: Vec<usize> = (0..40).map(|_| s.next_sample().unwrap()).collect();
        let part = fine_partition(&pts, n).unwrap();
        let out = assess_partition_streaming(&mut s, &part, 20.0, 100.0, &c).unwrap();
        assert_eq!(out.verdict.samples, plan.total_samples());
        assert!(out.verdict.peak_bits <= plan.budget_bits);
        out.verdict
    });
    assert!(acc >= 0.6, "{acc}");

    // 48 of 64 wide intervals carry their mass on one point: far mass 0.75.
    let part = IntervalPartition::from_sizes(&[64; 64]).unwrap();
    let mut w = vec![0.0; n];
    for j in 0..64 {
        if j < 48 {
            w[64 * j] = 1.0;
        } else {
            w[64 * j..64 * (j + 1)].iter_mut().for_each(|x| *x = 1.0 / 64.0);
        }
    }
    let far = ExplicitDistribution::from_weights(w).unwrap();
    let c = TesterConfig::new(0.1).unwrap().with_constants(assess_far_constants());
    let rej = 1.0 - accept_rate(60, |t| {
        let c = c.clone().with_seed(t);
        assess_partition_streaming(&mut stream(&far, t), &part, 20.0, 100.0, &c).unwrap().verdict
    });
    assert!(rej >= 0.6, "{rej}");
}

#[test]
fn learner_uniform_with_one_piece() {
    let mut k = Constants::profile("desk").unwrap();
    k.set("assess.T", 3e-9).unwrap();
    let c = TesterConfig::new(0.5).unwrap().with_constants(k);
    let u = ExplicitDistribution::uniform(512).unwrap();
    for t in 0..10 {
        let out = learn_decomposable_streaming(&mut stream(&u, t), 1, &c.clone().with_seed(t)).unwrap();
        assert!(out.verdict.accepted());
        let view = out.view.unwrap();
        assert!(tv_distance(&view.to_distribution(), &u).unwrap() <= 0.05);
    }
}

#[test]
fn learner_uniform_output_is_close() {
    let c = cfg(0.3, "desk");
    let n = 4096;
    let u = ExplicitDistribution::uniform(n).unwrap();
    let plan = assess_schedule(n, LEARNER_C, learner_r(n, 0.3), &c).unwrap();
    let k0 = fine_partition_samples(n, &c).unwrap();
    for t in 0..10 {
        let out = learn_decomposable_streaming(&mut stream(&u, t), n, &c.clone().with_seed(t)).unwrap();
        assert_eq!(out.verdict.samples, k0 + plan.total_samples());
        assert!(out.verdict.peak_bits <= 4 * plan.m);
        let view = out.view.expect("accepted");
        assert!(view.tv_to(&u).unwrap() <= 0.3);
    }
}

#[test]
fn decomposable_property_tester_examples() {
    let n = 4096;
    let c = cfg(0.3, "desk");
    let g = geometric(n, 0.998);
    let mono = |p: &ExplicitDistribution| distance_to_monotone(p);
    let acc = accept_rate(20, |t| {
        test_decomposable_property(&mut stream(&g, t), &mono, n, &c.clone().with_seed(t)).unwrap()
    });
    assert!(acc >= 0.6, "{acc}");
    let everything = |_: &ExplicitDistribution| 0.0;
    for t in 0..5 {
        let c = c.clone().with_seed(t);
        let learned = learn_decomposable_streaming(&mut stream(&g, t), n, &c).unwrap();
        let v = test_decomposable_property(&mut stream(&g, t), &everything, n, &c).unwrap();
        assert_eq!(v.decision, learned.verdict.decision);
    }

    let fine = cfg(0.05, "desk-fine");
    let far = no_instance(512, 0.9, 9);
    let rej = 1.0 - accept_rate(20, |t| {
        test_decomposable_property(&mut stream(&far, t), &mono, far.n(), &fine.clone().with_seed(t))
            .unwrap()
    });
    assert!(rej >= 0.6, "{rej}");
}

// Reproducibility.

#[test]
fn verdicts_are_reproducible() {
    let n = 1 << 12;
    let far = no_instance(n / 2, 0.9, 1);
    let c = cfg(0.3, "desk").with_seed(42);
    let runs: Vec<Box<dyn Fn() -> Verdict>> = vec![
        Box::new(|| collision_monotonicity(&mut stream(&far, 7), &c).unwrap()),
        Box::new(|| streaming_monotonicity(&mut stream(&geometric(1 << 14, 0.9995), 7), &c).unwrap()),
        Box::new(|| {
            learn_decomposable_streaming(&mut stream(&far, 7), n, &c).unwrap().verdict
        }),
        Box::new(|| {
            let u = ExplicitDistribution::uniform(256).unwrap();
            pcond_run(&u, &u, &cfg(0.25, "desk"), 7)
        }),
    ];
    for run in &runs {
        assert_eq!(run(), run());
    }
    // Diagnostics included: the far instance flags intervals.
    let fine = cfg(0.03, "desk-fine").with_seed(3);
    let far = no_instance(2048, 0.9, 5);
    let a = collision_monotonicity(&mut stream(&far, 1), &fine).unwrap();
    let b = collision_monotonicity(&mut stream(&far, 1), &fine).unwrap();
    assert!(!a.flagged_intervals.is_empty());
    assert_eq!(a, b);
    assert!(a.flagged_intervals.iter().all(|f| Interval::new(f.lo, f.hi).len() > 1));
}
