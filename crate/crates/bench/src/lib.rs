//! Experiment harness: TOML suites, parallel trials, CSV records, and the
//! `ts1-bench` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod image;
pub mod record;
pub mod runner;

pub use config::{ExperimentSpec, ImageSource, RankMode, SolverOptions, Suite, FULL_TRIALS};
pub use error::{BenchError, Result};
pub use record::{aggregate_success, emit_csv, parse_csv, read_csv, write_csv, ExperimentRecord, SuccessPoint, HEADER};
pub use runner::{run_suite, summarize, trial_seed, CellSummary};
