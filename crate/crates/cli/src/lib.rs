//! Configuration, dispatch and output handling for the `fermiflow` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;
pub mod summary;

pub use config::{parse_config, RunConfig, Scenario};
pub use error::RunnerError;
pub use run::run;
pub use summary::{RunSummary, SUMMARY_FILE};
