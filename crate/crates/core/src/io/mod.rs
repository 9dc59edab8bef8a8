//! Scenario loading, run driver and log records.

pub mod config;
pub mod log;
pub mod run;

pub use config::{load_scenario, parse_scenario, Overrides, RunConfig};
pub use run::{run, run_toy_orbit, simulate, write_outputs, RunOutput, EXIT_CLEAN, EXIT_COLLISION, EXIT_FAULT};
