//! Configuration-driven experiment runner for the `jsdm` crate: scenario
//! files, det-eq and Monte Carlo pipelines, sweeps, invariant suites and
//! versioned CSV output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod rng;
pub mod sweep;
pub mod validate;

pub use config::Scenario;
pub use error::{HarnessError, Result};
