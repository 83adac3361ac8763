//! Scenario catalog, configuration, reports and the `chlab` command line
//! for `chlab-core`.

pub mod catalog;
pub mod config;
pub mod error;
mod interpolant;
mod sweeps;
pub mod report;
mod run;
mod surfaces;

pub use catalog::{default_config, CATALOG};
pub use config::ScenarioConfig;
pub use error::{Result, ScenarioError};
pub use report::{emit_report, ScenarioReport};
pub use run::{run_scenario, WORKERS_ENV};
