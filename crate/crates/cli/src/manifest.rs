use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use copula_impute::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one CLI run, written once when the run finishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub seed: u64,
    /// Resolved configuration after layering flags, file and defaults.
    pub config: serde_json::Value,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub inputs: Vec<PathBuf>,
    /// Output files relative to the output directory, sorted.
    pub outputs: Vec<PathBuf>,
}

pub fn now_unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64, config: &impl Serialize, started_unix_ms: u64) -> Result<Self> {
        Ok(RunManifest {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: serde_json::to_value(config)?,
            started_unix_ms,
            finished_unix_ms: 0,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Stamps the finish time, lists the files under `dir` and writes the
    /// manifest there.
    pub fn finish(mut self, dir: &Path) -> Result<PathBuf> {
        self.finished_unix_ms = now_unix_ms();
        let mut outputs = Vec::new();
        list_files(dir, dir, &mut outputs)?;
        outputs.retain(|p| p != Path::new(MANIFEST_FILE));
        outputs.sort();
        self.outputs = outputs;
        let path = dir.join(MANIFEST_FILE);
        crate::output::write_json(&path, &self)?;
        Ok(path)
    }
}

fn list_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Data(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::Data(e.to_string()))?.path();
        if path.is_dir() {
            list_files(root, &path, out)?;
        } else if let Ok(rel) = path.strip_prefix(root) {
            out.push(rel.to_path_buf());
        }
    }
    Ok(())
}
