//! File formats, the Monte Carlo verification harness and the command-line
//! front end for `gamker-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod io;

pub use config::{Checks, ExperimentConfig, ExperimentKind, GridSpec};
pub use error::{Error, Result};
pub use harness::{ks_distance, run, run_bias, run_clt, run_consistency, ExperimentReport};
pub use io::ingest_csv;
