//! Command-line runner for label enhancement experiments.
//!
//! The `lcdr` binary wraps four subcommands: `enhance` runs the full
//! pipeline, `degrade` turns distributions into logical labels, `eval`
//! scores predictions and `synth` generates synthetic data. Everything the
//! binary does is available here so tests can drive it without a process.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod synth;

pub use config::{ExperimentConfig, FeaturesVariant, Settings, TargetsVariant};
pub use error::{CliError, Result};
pub use pipeline::{enhance, run_degrade, run_enhance, run_eval, standardize, Enhanced};
pub use synth::{run_synth, synthesize, SynthConfig};
