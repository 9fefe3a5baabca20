//! Run directories: `<out>/<label>`, staged next to the target and renamed into
//! place once every artifact is written.

use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

pub struct RunDir {
    target: PathBuf,
    staging: PathBuf,
    force: bool,
}

impl RunDir {
    /// Checks the label and the overwrite rule without touching the disk.
    pub fn plan(out: &Path, label: &str, force: bool) -> Result<Self, CliError> {
        let bad =
            label.is_empty() || label == "." || label == ".." || label.starts_with('.') || label.contains(['/', '\\']);
        if bad {
            return Err(CliError::Usage(format!("invalid run label {label:?}")));
        }
        let target = out.join(label);
        if target.exists() && !force {
            return Err(CliError::Usage(format!(
                "run directory {} already exists (pass --force to replace it)",
                target.display()
            )));
        }
        let staging = out.join(format!(".{label}.partial-{}", std::process::id()));
        Ok(RunDir { target, staging, force })
    }

    /// Creates the staging directory, lets `write` fill it, then publishes it.
    pub fn commit(self, write: impl FnOnce(&Path) -> hsreid_core::Result<()>) -> Result<PathBuf, CliError> {
        let io = |path: &Path, e: std::io::Error| CliError::Stage(format!("{}: {e}", path.display()));
        if self.staging.exists() {
            fs::remove_dir_all(&self.staging).map_err(|e| io(&self.staging, e))?;
        }
        fs::create_dir_all(&self.staging).map_err(|e| io(&self.staging, e))?;
        if let Err(e) = write(&self.staging) {
            let _ = fs::remove_dir_all(&self.staging);
            return Err(CliError::from(e));
        }
        if self.target.exists() {
            if !self.force {
                let _ = fs::remove_dir_all(&self.staging);
                return Err(CliError::Usage(format!(
                    "run directory {} already exists",
                    self.target.display()
                )));
            }
            fs::remove_dir_all(&self.target).map_err(|e| io(&self.target, e))?;
        }
        fs::rename(&self.staging, &self.target).map_err(|e| io(&self.target, e))?;
        Ok(self.target)
    }
}
