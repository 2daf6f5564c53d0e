//! Shared domain types: configuration, partition, decisions, randomness.

pub mod config;
pub mod decision;
pub mod partition;
pub mod rng;

pub use config::{
    validate_config, ConfigErrors, QualityLevel, RunSettings, ScenarioConfig, SchedulerKind, SimConfig,
    VideoCatalog, Violation,
};
pub use decision::{level_of, prefix, Level, RbGrant, SlotDecision};
pub use partition::{check_partition, Node, PartitionErrors, Role, RsuId, SlicePartition, VehicleId};
pub use rng::{derive_seed, stream, RandomSource};
