//! Batch front end for `hplane-core`: configuration, file formats, run
//! orchestration and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod io;
pub mod report;
pub mod run;

pub use config::{emit_config, parse_config, Command, RunConfig};
pub use error::CliError;
pub use run::run;
