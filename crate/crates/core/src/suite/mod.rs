//! Batch runs: a JSON config selects models, densities and suites; the run
//! produces a JSON report and a CSV summary.

pub mod config;
pub mod density;
pub mod output;
pub mod runner;

pub use config::{ConfigError, LyapunovSpec, ModelSpec, SuiteConfig, SuiteId, WitnessShape};
pub use density::{DensityFamilySpec, MixtureSpec};
pub use runner::{run_suite, Counts, ModelSummary, SuiteOutcome, TaskError};
