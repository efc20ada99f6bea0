//! Run configuration files: strict JSON, one experiment per file.

use std::path::{Path, PathBuf};

use churnlab_core::train::{ChurnSpec, RetrievalSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Experiment {
    Churn(ChurnSpec),
    Retrieval(RetrievalSpec),
}

/// On-disk layout: `{"output_dir": ..., "run": {"experiment": "churn", ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    /// Used when `--out` is not given.
    #[serde(default)]
    output_dir: Option<PathBuf>,
    run: Experiment,
}

/// A parsed config plus where its outputs go.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub experiment: Experiment,
    pub output_dir: Option<PathBuf>,
    /// SHA-256 of the canonical JSON of `experiment`.
    pub digest: String,
}

pub fn parse_config(text: &str) -> std::result::Result<LoadedConfig, serde_json::Error> {
    let raw: RawConfig = serde_json::from_str(text)?;
    let digest = digest(&raw.run)?;
    Ok(LoadedConfig { experiment: raw.run, output_dir: raw.output_dir, digest })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cfg = parse_config(&text).map_err(|source| CliError::Config { path: path.into(), source })?;
    match &cfg.experiment {
        Experiment::Churn(spec) => spec.validate()?,
        Experiment::Retrieval(spec) => spec.validate()?,
    }
    Ok(cfg)
}

pub fn digest<T: Serialize>(value: &T) -> std::result::Result<String, serde_json::Error> {
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(value)?)))
}
