//! Experiment runner for mistake-ball recurrence statistics.
//!
//! A JSON config names an experiment, a system, a measure and grids; the
//! runner evaluates every (sample, n, eps) cell, writes one CSV row per
//! cell and a summary recomputed from that CSV.

pub mod config;
pub mod runner;

pub use config::{validate_config, Diagnostic, Experiment, ExperimentConfig};
pub use runner::{run_experiment, summarize_csv, RunError, RunOptions, RunOutcome};
