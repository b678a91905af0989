use std::path::Path;

use serde::Deserialize;

use crate::{Algorithm, CliError};

pub const TAIL_TOL: f64 = 1e-9;
pub const SEED: u64 = 0;
pub const TRIALS: u64 = 100_000;

/// Defaults read from the document named by `--config` or `PB_CONFIG`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub epsilon: Option<f64>,
    pub tail_tol: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub algorithm: Option<Algorithm>,
}

impl Defaults {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("bad config {}: {e}", path.display())))
    }

    /// The flag value, else the configured one; there is no built-in.
    pub fn epsilon(&self, flag: Option<f64>) -> Result<f64, CliError> {
        flag.or(self.epsilon)
            .ok_or_else(|| CliError::Input("--epsilon is required (or set epsilon in the config document)".into()))
    }
}
