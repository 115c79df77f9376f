//! The structured-text run report shared by every command.

use crate::config::{Command, RunConfig};
use hplane_core::verify::CheckReport;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub hplane_core: String,
    pub hplane_cli: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub exit_code: i32,
    #[serde(with = "crate::config::seed_repr")]
    pub seed: u64,
    pub threads: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
    pub versions: Versions,
    /// Echo of the configuration with defaults filled in.
    pub config: RunConfig,
    pub checks: Vec<CheckReport>,
}

impl RunReport {
    pub fn new(cfg: &RunConfig) -> Self {
        RunReport {
            command: cfg.command,
            exit_code: 0,
            seed: cfg.seed,
            threads: cfg.threads,
            error: None,
            artifacts: Vec::new(),
            versions: Versions { hplane_core: hplane_core::VERSION.into(), hplane_cli: env!("CARGO_PKG_VERSION").into() },
            config: cfg.clone(),
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("reports always serialize")
    }
}
