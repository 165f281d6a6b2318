use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmarking::RbConfig;
use crate::error::{Error, Result};
use crate::qelp::{PipelineConfig, SearchGrid};

pub const DEFAULT_SEEDS: [u64; 10] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9];

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Names the output folder.
    pub name: String,
    /// Bundled dataset name (`iris`, `wine`, `heart_disease`, `german_credit`) or a CSV path.
    pub dataset: String,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// When present, RB runs once and its mean survival is stored as the RB score.
    #[serde(default)]
    pub rb: Option<RbConfig>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!(
                "invalid experiment name `{}`",
                self.name
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        self.pipeline.validate()?;
        if let Some(rb) = &self.rb {
            rb.validate()?;
        }
        Ok(())
    }
}

/// Parses JSON into `T`, turning syntax and type errors into line-numbered messages.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = read_json(path)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_grid(path: &Path) -> Result<SearchGrid> {
    read_json(path)
}
