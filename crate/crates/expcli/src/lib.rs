//! Experiment runner for the `embezzle-core` library: shipped fixture
//! states, TOML configuration, CSV results with run manifests, and the
//! `embezzle` command line.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod fixtures;
pub mod output;
