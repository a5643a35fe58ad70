//! Portable on-disk formats: 16-bit raster frames with JSON sidecars, and
//! camera profile documents.

mod frame_file;
mod profile;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub use frame_file::{read_frame, read_sidecar, sidecar_path, write_frame, FrameFile, FrameSidecar, FRAME_FORMAT_VERSION};
pub use profile::{parse_profile, read_profile, serialize_profile, write_profile, PROFILE_FORMAT_VERSION};

use crate::error::{Error, Result};

/// Write `bytes` to a temporary sibling of `path`, then rename over it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::format(path, "path", "no file name"))?
        .to_string_lossy();
    let tmp: PathBuf = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
