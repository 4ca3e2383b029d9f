//! Regression fixtures keyed by command and a hash of the configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn fixture_path(dir: &Path, command: &str, cfg: &Value) -> PathBuf {
    // serde_json maps are ordered by key, so this text is canonical
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(cfg.to_string().as_bytes());
    let hex: String = h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect();
    dir.join(format!("{command}-{hex}.json"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum FixtureOutcome {
    Written(PathBuf),
    Matched(PathBuf),
}

/// Writes `observed` on first use; afterwards it must equal the stored value.
pub fn check_or_write(dir: &Path, command: &str, cfg: &Value, observed: &Value) -> Result<FixtureOutcome, CliError> {
    let path = fixture_path(dir, command, cfg);
    if path.exists() {
        let stored: Value = serde_json::from_str(&fs::read_to_string(&path)?)?;
        if stored.get("observed") != Some(observed) {
            return Err(CliError::Assertion(format!(
                "regression mismatch in {}: stored {}, observed {observed}",
                path.display(),
                stored.get("observed").unwrap_or(&Value::Null)
            )));
        }
        return Ok(FixtureOutcome::Matched(path));
    }
    fs::create_dir_all(dir)?;
    let body = serde_json::json!({ "command": command, "config": cfg, "observed": observed });
    fs::write(&path, serde_json::to_string_pretty(&body)? + "\n")?;
    Ok(FixtureOutcome::Written(path))
}
