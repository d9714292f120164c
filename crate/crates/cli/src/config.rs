//! Optional JSON configuration. Keys mirror the long flag names with
//! underscores; a flag given on the command line overrides the file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<PathBuf>,
    pub sigma_gauss: Option<f64>,
    pub sigma_log: Option<f64>,
    pub num_lines: Option<usize>,
    pub bandwidth: Option<f64>,
    pub weight_power: Option<f64>,
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub features: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub split: Option<String>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub patience: Option<usize>,
    pub trials: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub noise_eps: Option<f64>,
    pub sizes: Option<Vec<usize>>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let bytes = crate::output::read(p)?;
                serde_json::from_slice(&bytes).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}

/// Flag value, else file value, else default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
