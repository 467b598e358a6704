//! Config-driven experiments on top of `sdde-core`.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use experiments::{run_experiment, Experiment, ExperimentRegistry, Setup};
