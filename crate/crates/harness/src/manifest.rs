use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{sha256_hex, HarnessError};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub config_path: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub trials: usize,
    pub threads: usize,
    pub wall_clock_s: f64,
    pub regimes: Vec<RegimeEntry>,
    pub files: Vec<FileEntry>,
    pub points: Vec<PointEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeEntry {
    pub epsilon: f64,
    pub regime_hash: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEntry {
    pub epsilon: f64,
    pub lambda_per_km2: f64,
    pub runtime_s: f64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl FileEntry {
    pub fn of(name: &str, bytes: &[u8]) -> Self {
        Self {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        }
    }
}

impl RunManifest {
    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string_pretty(self).map_err(|e| HarnessError::Manifest(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| HarnessError::Manifest(format!("{}: {}", path.display(), e.message())))
    }

    pub fn regime_for_file(&self, file: &str) -> Option<&RegimeEntry> {
        self.regimes.iter().find(|r| r.file == file)
    }

    /// Files under `dir` whose checksum differs from the record.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>, HarnessError> {
        let mut bad = Vec::new();
        for f in &self.files {
            let path = dir.join(&f.path);
            let bytes = fs::read(&path).map_err(|source| HarnessError::Io { path, source })?;
            if sha256_hex(&bytes) != f.sha256 {
                bad.push(f.path.clone());
            }
        }
        Ok(bad)
    }
}
