//! Output directory helpers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use copula_impute::{Error, Result};
use serde::Serialize;

use crate::cli::{DEFAULT_OUTPUT_ROOT, OUTPUT_ROOT_ENV};

/// `--out` when given, else `<root>/<subcommand>` where the root comes from
/// the environment or the built-in default.
pub fn output_dir(flag: Option<&Path>, subcommand: &str) -> PathBuf {
    match flag {
        Some(p) => p.to_path_buf(),
        None => {
            let root = std::env::var_os(OUTPUT_ROOT_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
            root.join(subcommand)
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Data(format!("cannot create {}: {e}", dir.display())))
}

/// Removes a previous run's subdirectory so stale files do not survive.
pub fn reset_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| Error::Data(format!("cannot clear {}: {e}", dir.display())))?;
    }
    ensure_dir(dir)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

/// `with(writer)` into a buffered file at `path`, flushing afterwards.
pub fn write_with(path: &Path, with: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    with(&mut w)?;
    w.flush().map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}
