use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::frame::{BayerPattern, FrameKind, FrameMeta, RawFrame};
use crate::params::NoiseParams;
use crate::scalar::Real;

pub const FRAME_FORMAT_VERSION: u32 = 1;

/// JSON document stored next to every raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSidecar {
    pub format_version: u32,
    pub width: usize,
    pub height: usize,
    pub camera_id: String,
    pub iso: u32,
    pub bayer_pattern: BayerPattern,
    pub black_level: u32,
    pub white_level: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exposure_time_s: Option<f64>,
    pub kind: FrameKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low_light_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_params: Option<NoiseParams<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream_id: Option<u64>,
}

impl FrameSidecar {
    pub fn describe<T: Real>(frame: &RawFrame<T>, kind: FrameKind) -> Self {
        Self {
            format_version: FRAME_FORMAT_VERSION,
            width: frame.width(),
            height: frame.height(),
            camera_id: frame.meta.camera_id.clone(),
            iso: frame.meta.iso,
            bayer_pattern: frame.meta.bayer_pattern,
            black_level: frame.meta.black_level,
            white_level: frame.meta.white_level,
            exposure_time_s: None,
            kind,
            low_light_factor: None,
            noise_params: None,
            seed: None,
            stream_id: None,
        }
    }

    pub fn meta(&self) -> FrameMeta {
        FrameMeta {
            bayer_pattern: self.bayer_pattern,
            black_level: self.black_level,
            white_level: self.white_level,
            iso: self.iso,
            camera_id: self.camera_id.clone(),
        }
    }
}

/// A frame together with its sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFile<T> {
    pub frame: RawFrame<T>,
    pub sidecar: FrameSidecar,
}

/// `frame.pgm` -> `frame.json`.
pub fn sidecar_path(raster: &Path) -> PathBuf {
    raster.with_extension("json")
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

/// Parse a binary 16-bit PGM into (width, height, samples).
fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let mut pos = 0;
    let bad = |field: &str, msg: &str| Error::format(path, field, msg);
    if header_token(bytes, &mut pos) != Some(b"P5") {
        return Err(bad("magic", "expected binary PGM (P5)"));
    }
    let mut num = |field: &str| -> Result<usize> {
        header_token(bytes, &mut pos)
            .and_then(|t| std::str::from_utf8(t).ok())
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(field, "missing or malformed header value"))
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")?;
    if maxval != 65535 {
        return Err(bad("maxval", &format!("expected 65535, got {maxval}")));
    }
    // exactly one whitespace byte separates the header from the samples
    pos += 1;
    let need = 2 * width * height;
    let body = bytes.get(pos..).unwrap_or(&[]);
    if body.len() < need {
        return Err(bad(
            "raster",
            &format!("truncated: {} of {need} sample bytes", body.len()),
        ));
    }
    if body.len() > need {
        return Err(bad("raster", &format!("{} trailing bytes", body.len() - need)));
    }
    let samples = body.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
    Ok((width, height, samples))
}

/// The validated sidecar of the raster at `path`, without reading the raster.
pub fn read_sidecar(path: &Path) -> Result<FrameSidecar> {
    let side_path = sidecar_path(path);
    let side_text = std::fs::read_to_string(&side_path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::format(&side_path, "sidecar", "missing sidecar"),
        _ => Error::io(&side_path, e),
    })?;
    let sidecar: FrameSidecar =
        serde_json::from_str(&side_text).map_err(|e| Error::format(&side_path, "sidecar", e.to_string()))?;
    if sidecar.format_version != FRAME_FORMAT_VERSION {
        return Err(Error::format(
            &side_path,
            "format_version",
            format!("unsupported version {}", sidecar.format_version),
        ));
    }
    if sidecar.black_level >= sidecar.white_level || sidecar.white_level > 65535 {
        return Err(Error::format(&side_path, "white_level", "need black_level < white_level <= 65535"));
    }
    Ok(sidecar)
}

/// Read a raster and its sidecar, subtracting the black level.
///
/// Values below the black level are clamped to zero for image frames;
/// bias and flat captures keep them (negative after subtraction), since
/// calibration statistics need the full noise distribution.
pub fn read_frame<T: Real>(path: &Path) -> Result<FrameFile<T>> {
    let sidecar = read_sidecar(path)?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (w, h, raw) = parse_pgm(path, &bytes)?;
    if w != sidecar.width {
        return Err(Error::format(path, "width", format!("raster {w} vs sidecar {}", sidecar.width)));
    }
    if h != sidecar.height {
        return Err(Error::format(path, "height", format!("raster {h} vs sidecar {}", sidecar.height)));
    }
    if let Some(v) = raw.iter().find(|v| u32::from(**v) > sidecar.white_level) {
        return Err(Error::format(
            path,
            "white_level",
            format!("sample {v} above white level {}", sidecar.white_level),
        ));
    }
    let black = sidecar.black_level as f64;
    let keep_negative = sidecar.kind.is_calibration();
    let data: Vec<T> = raw
        .iter()
        .map(|&v| {
            let d = v as f64 - black;
            T::of(if keep_negative { d } else { d.max(0.0) })
        })
        .collect();
    let frame = RawFrame::new(w, h, data, sidecar.meta()).map_err(|e| Error::format(path, "geometry", e.to_string()))?;
    Ok(FrameFile { frame, sidecar })
}

/// Write the raster (black level added back, rounded, clamped to
/// `[0, white_level]`) and then its sidecar, each atomically.
pub fn write_frame<T: Real>(path: &Path, frame: &RawFrame<T>, sidecar: &FrameSidecar) -> Result<()> {
    if sidecar.width != frame.width() || sidecar.height != frame.height() || sidecar.meta() != frame.meta {
        return Err(Error::format(
            sidecar_path(path),
            "sidecar",
            "sidecar geometry or metadata disagrees with the frame",
        ));
    }
    let black = frame.meta.black_level as f64;
    let white = frame.meta.white_level as f64;
    let header = format!("P5\n{} {}\n65535\n", frame.width(), frame.height());
    let mut bytes = Vec::with_capacity(header.len() + 2 * frame.len());
    bytes.extend_from_slice(header.as_bytes());
    for v in frame.data() {
        let raw = (v.as_f64() + black).round().clamp(0.0, white) as u16;
        bytes.extend_from_slice(&raw.to_be_bytes());
    }
    write_atomic(path, &bytes)?;
    let json = serde_json::to_vec_pretty(sidecar).expect("sidecar serializes");
    write_atomic(&sidecar_path(path), &json)
}
