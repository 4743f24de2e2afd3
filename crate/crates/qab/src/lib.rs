//! Verification harness: run configuration, generic-point sampling, suite
//! orchestration and report output for the `qab` command-line tool.

pub mod config;
pub mod output;
pub mod sampling;
pub mod suites;

pub use config::{load_config, parse_config, Precision, RunConfig};
pub use suites::{run_suite, CheckRecord, HarnessError, RunReport};
