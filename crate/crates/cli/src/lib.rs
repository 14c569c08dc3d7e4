//! Command-line front end for the `holonome` simulator: configuration,
//! dispatch, data export and plots.

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod run;

pub use config::{parse_config, Experiment, FlagOverrides, RunConfig};
pub use error::CliError;
pub use run::{dispatch, RunManifest, RunOutcome};
