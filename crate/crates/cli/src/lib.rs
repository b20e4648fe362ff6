//! Experiment driver for `qdimer-core`: configuration, reports, the
//! verification suites and the numerical experiments behind the `qdimer`
//! binary.

pub mod cases;
pub mod config;
pub mod experiments;
pub mod report;
pub mod verify;

pub use config::ExperimentConfig;
pub use report::{Check, Metric, Report};
