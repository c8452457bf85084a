//! Loading `FusionConfig` from JSON or TOML files.

use std::fs;
use std::path::Path;

use evrank::FusionConfig;

use crate::error::{CliError, Result};

/// Reads a config file; `.toml` files are parsed as TOML, everything else as JSON.
pub fn load_config(path: &Path) -> Result<FusionConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parsed: FusionConfig = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| CliError::Contract(format!("{}: {e}", path.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::Contract(format!("{}: {e}", path.display())))?
    };
    Ok(parsed)
}
