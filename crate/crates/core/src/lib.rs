//! Memory-constrained streaming testers for discrete distributions over
//! `[n] = {1, ..., n}`.
//!
//! The crate covers identity testing with pair-conditional queries backed by
//! a CountMin sketch, monotonicity testing over oblivious interval partitions
//! with pairwise and bipartite collision counts, and learning and testing of
//! decomposable distributions. Every tester runs against a single-pass sample
//! stream and charges its retained state to a bit-level [`MemoryLedger`].

pub mod cms;
pub mod collision;
pub mod dist;
pub mod error;
pub mod instance;
mod monotone;
pub mod oracles;
pub mod partition;
pub mod profiles;
pub mod testers;

pub use cms::CountMinSketch;
pub use collision::{
    bipartite_collisions, classify_bipartite, classify_pairwise, pairwise_collisions,
    Classification, CollisionStats, ThresholdMode,
};
pub use dist::{
    distance_to_monotone, flatten, flattened_distance_certificate, gen_monotone,
    gen_no_instance, gen_no_instance_with_signs, l2_norm_sq, reduce, tv_distance,
    ExplicitDistribution, FlattenedView, MonotoneKind, ReducedDistribution,
};
pub use error::{Error, Result};
pub use oracles::{
    MemoryLedger, PcondOracle, ReducedStream, ReplayStream, SampOracle, SampleSource,
    SampleStream,
};
pub use partition::{
    birge_partition, bucketize, empirical_reduced, fine_partition, BucketPartition, Interval,
    IntervalPartition,
};
pub use profiles::Constants;
pub use testers::{CompareResult, Decision, TesterConfig, Verdict};
