use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

pub const RASTER_EXT: &str = "pgm";

/// Raster files directly inside `dir`, sorted by file name.
pub fn list_rasters(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let hidden = path
            .file_name()
            .map(|n| n.to_string_lossy().starts_with('.'))
            .unwrap_or(true);
        if !hidden && path.is_file() && path.extension().is_some_and(|e| e == RASTER_EXT) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// An output directory built under a hidden sibling and renamed into place
/// on commit. Dropping it uncommitted removes everything written so far.
pub struct StagedDir {
    staging: PathBuf,
    target: PathBuf,
    committed: bool,
}

impl StagedDir {
    pub fn new(target: &Path) -> CliResult<Self> {
        if target.exists() {
            let empty = target.is_dir()
                && fs::read_dir(target)
                    .map_err(|e| CliError::io(target, e))?
                    .next()
                    .is_none();
            if !empty {
                return Err(CliError::usage(format!(
                    "output {} already exists and is not an empty directory",
                    target.display()
                )));
            }
        }
        let parent = target
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        let name = target
            .file_name()
            .ok_or_else(|| CliError::usage(format!("output {} has no directory name", target.display())))?
            .to_string_lossy();
        let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| CliError::io(&staging, e))?;
        }
        fs::create_dir(&staging).map_err(|e| CliError::io(&staging, e))?;
        Ok(Self {
            staging,
            target: target.to_path_buf(),
            committed: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.staging
    }

    pub fn commit(mut self) -> CliResult<()> {
        if self.target.exists() {
            fs::remove_dir(&self.target).map_err(|e| CliError::io(&self.target, e))?;
        }
        fs::rename(&self.staging, &self.target).map_err(|e| CliError::io(&self.target, e))?;
        self.committed = true;
        Ok(())
    }
}

impl Drop for StagedDir {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}
