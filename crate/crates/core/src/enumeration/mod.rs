//! Brute-force ground truth and exact sampling for dimer and double-dimer
//! configurations.

mod covers;
mod sampler;

pub use covers::{
    config_weight, dimer_partition, enumerate_dimer_covers, enumerate_double_dimer, pair_all, pair_to_config,
    partition_from_configs, partition_oracle, DimerCover, DoubleDimerConfig, Loop, WeightedZ, DEFAULT_CAP,
};
pub use sampler::{
    sample_dimer_cover, sample_dimer_covers, sample_double_dimers, write_jsonl, DimerSampler, CHUNK,
};
