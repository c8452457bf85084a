//! Self-describing header embedded in every output file.

use std::fs;
use std::path::Path;

use evrank::{FusionConfig, FusionMode, PriorMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(role: &str, path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMode {
    pub fusion: FusionMode,
    pub prior: PriorMode,
    /// Flat merge of raw candidates, no tuple scoring.
    pub baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalSettings {
    pub top_k: usize,
    pub pool_text: usize,
    pub pool_image: usize,
    pub pool_screenshot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub mode: RunMode,
    pub retrieval: RetrievalSettings,
    pub config: FusionConfig,
    pub inputs: Vec<InputDigest>,
    /// Unix seconds from `SOURCE_DATE_EPOCH`; absent otherwise so reruns stay byte-identical.
    pub timestamp: Option<u64>,
}

pub fn build_timestamp() -> Option<u64> {
    std::env::var("SOURCE_DATE_EPOCH").ok()?.trim().parse().ok()
}

/// First line of a run file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestLine {
    pub manifest: RunManifest,
}
