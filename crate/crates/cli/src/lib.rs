//! Command-line driver for the perturbed-cylinder solver: configuration files, the
//! tabulated runs and sweeps, and CSV/JSON artifacts.

pub mod args;
pub mod artifact;
pub mod commands;
pub mod config;
pub mod parallel;
pub mod solve;

pub use artifact::{Artifact, Cell, RowStatus};
pub use config::{ConfigError, Format, Problem, RunConfig};
