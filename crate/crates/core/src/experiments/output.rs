//! CSV files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Table;
use crate::error::Result;

/// SHA-256 of the JSON serialization of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_string(config)?;
    Ok(hex::encode(Sha256::digest(json.as_bytes())))
}

/// Provenance record written next to the CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new<T: Serialize>(experiment: &str, config: &T, files: Vec<String>) -> Result<Self> {
        Ok(Self {
            experiment: experiment.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: config_hash(config)?,
            config: serde_json::to_value(config)?,
            files,
        })
    }
}

impl Table {
    /// Writes `<dir>/<file>` and returns its path.
    pub fn write_csv(&self, dir: &Path, file: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(file);
        fs::write(&path, self.to_csv())?;
        Ok(path)
    }
}

/// Writes `<dir>/<experiment>.manifest.json`.
pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.manifest.json", manifest.experiment));
    fs::write(&path, serde_json::to_string_pretty(manifest)? + "\n")?;
    Ok(path)
}
