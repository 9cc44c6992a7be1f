//! Experiment harness for `allelo-core`: TOML configs, seeded runs with
//! manifests, parameter sweeps and the acceptance suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod config;
pub mod error;
pub mod manifest;
pub mod oracles;
pub mod runner;
pub mod sweep;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{exit, CliError, Result};
pub use manifest::{Manifest, OutputDir};
pub use runner::{run, run_path, Format, RunOptions, RunResult};
