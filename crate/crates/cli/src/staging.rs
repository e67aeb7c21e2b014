//! Outputs are written into a hidden sibling directory and renamed onto the
//! target only once every file is complete.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub struct Stage {
    dir: tempfile::TempDir,
    target: PathBuf,
}

impl Stage {
    pub fn new(target: &Path) -> Result<Self> {
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| CliError::io(&parent, e))?;
        let dir = tempfile::Builder::new()
            .prefix(".srls-stage-")
            .tempdir_in(&parent)
            .map_err(|e| CliError::io(&parent, e))?;
        Ok(Self {
            dir,
            target: target.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    /// Moves the staged directory onto the target, replacing any previous
    /// output there.
    pub fn commit(self) -> Result<()> {
        let target = self.target;
        let staged = self.dir.keep();
        let outcome = replace_dir(&staged, &target);
        if outcome.is_err() {
            let _ = fs::remove_dir_all(&staged);
        }
        outcome
    }
}

fn replace_dir(staged: &Path, target: &Path) -> Result<()> {
    if !target.exists() {
        return fs::rename(staged, target).map_err(|e| CliError::io(target, e));
    }
    if !target.is_dir() {
        return Err(CliError::Usage(format!(
            "{} exists and is not a directory",
            target.display()
        )));
    }
    let mut backup = target.as_os_str().to_owned();
    backup.push(format!(".srls-old-{}", std::process::id()));
    let backup = PathBuf::from(backup);
    fs::rename(target, &backup).map_err(|e| CliError::io(target, e))?;
    if let Err(e) = fs::rename(staged, target) {
        let _ = fs::rename(&backup, target);
        return Err(CliError::io(target, e));
    }
    fs::remove_dir_all(&backup).map_err(|e| CliError::io(&backup, e))
}
