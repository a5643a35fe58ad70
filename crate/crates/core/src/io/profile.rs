use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::calibration::{CameraProfile, IsoParams};
use crate::synthesis::JointParamModel;
use crate::error::{Error, Result};

pub const PROFILE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ProfileDoc {
    format_version: u32,
    camera_id: String,
    per_iso: BTreeMap<u32, IsoParams>,
    joint: JointParamModel,
}

pub fn serialize_profile(profile: &CameraProfile) -> String {
    let doc = ProfileDoc {
        format_version: PROFILE_FORMAT_VERSION,
        camera_id: profile.camera_id.clone(),
        per_iso: profile.per_iso.clone(),
        joint: profile.joint.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("profile serializes")
}

pub fn parse_profile(text: &str, origin: &Path) -> Result<CameraProfile> {
    let doc: ProfileDoc = serde_json::from_str(text).map_err(|e| Error::format(origin, "profile", e.to_string()))?;
    if doc.format_version != PROFILE_FORMAT_VERSION {
        return Err(Error::format(
            origin,
            "format_version",
            format!("unsupported version {}", doc.format_version),
        ));
    }
    let profile = CameraProfile {
        camera_id: doc.camera_id,
        per_iso: doc.per_iso,
        joint: doc.joint,
    };
    profile
        .validate()
        .map_err(|e| Error::format(origin, "joint", e.to_string()))?;
    Ok(profile)
}

pub fn read_profile(path: &Path) -> Result<CameraProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_profile(&text, path)
}

pub fn write_profile(path: &Path, profile: &CameraProfile) -> Result<()> {
    write_atomic(path, serialize_profile(profile).as_bytes())
}
