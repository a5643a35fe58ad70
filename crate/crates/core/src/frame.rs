//! Single-channel raw frames and Bayer packing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// 2×2 colour filter layout, named by the quad read row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum BayerPattern {
    #[default]
    #[serde(rename = "RGGB")]
    Rggb,
    #[serde(rename = "BGGR")]
    Bggr,
    #[serde(rename = "GRBG")]
    Grbg,
    #[serde(rename = "GBRG")]
    Gbrg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Red,
    Green,
    Blue,
}

impl BayerPattern {
    /// Colours at quad offsets (0,0), (0,1), (1,0), (1,1).
    pub fn channels(self) -> [Channel; 4] {
        use Channel::*;
        match self {
            BayerPattern::Rggb => [Red, Green, Green, Blue],
            BayerPattern::Bggr => [Blue, Green, Green, Red],
            BayerPattern::Grbg => [Green, Red, Blue, Green],
            BayerPattern::Gbrg => [Green, Blue, Red, Green],
        }
    }
}

impl std::str::FromStr for BayerPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RGGB" => Ok(Self::Rggb),
            "BGGR" => Ok(Self::Bggr),
            "GRBG" => Ok(Self::Grbg),
            "GBRG" => Ok(Self::Gbrg),
            other => Err(Error::Config(format!("unknown Bayer pattern {other:?}"))),
        }
    }
}

/// What a frame is, as recorded in its sidecar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    #[default]
    Clean,
    Noisy,
    Bias,
    Flat,
}

impl FrameKind {
    /// Calibration captures keep values below the black level.
    pub fn is_calibration(self) -> bool {
        matches!(self, FrameKind::Bias | FrameKind::Flat)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Clean => "clean",
            Self::Noisy => "noisy",
            Self::Bias => "bias",
            Self::Flat => "flat",
        }
    }
}

impl std::fmt::Display for FrameKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FrameKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clean" => Ok(Self::Clean),
            "noisy" => Ok(Self::Noisy),
            "bias" => Ok(Self::Bias),
            "flat" => Ok(Self::Flat),
            other => Err(Error::Config(format!("unknown frame kind {other:?}"))),
        }
    }
}

/// Sensor metadata carried alongside the samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub bayer_pattern: BayerPattern,
    pub black_level: u32,
    pub white_level: u32,
    pub iso: u32,
    pub camera_id: String,
}

impl Default for FrameMeta {
    fn default() -> Self {
        Self {
            bayer_pattern: BayerPattern::Rggb,
            black_level: 0,
            white_level: 65535,
            iso: 100,
            camera_id: String::from("synthetic"),
        }
    }
}

impl FrameMeta {
    /// Largest valid black-level-subtracted value.
    pub fn range_max(&self) -> u32 {
        self.white_level - self.black_level
    }
}

/// Row-major grid of black-level-subtracted digital numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFrame<T> {
    data: Vec<T>,
    width: usize,
    height: usize,
    pub meta: FrameMeta,
}

impl<T: Real> RawFrame<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>, meta: FrameMeta) -> Result<Self> {
        if width == 0 || height == 0 || width % 2 != 0 || height % 2 != 0 {
            return Err(Error::Shape(format!(
                "frame must have positive even dimensions, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "{} samples for a {width}x{height} frame",
                data.len()
            )));
        }
        if meta.black_level >= meta.white_level {
            return Err(Error::Config(format!(
                "black level {} must be below white level {}",
                meta.black_level, meta.white_level
            )));
        }
        Ok(Self {
            data,
            width,
            height,
            meta,
        })
    }

    pub fn filled(width: usize, height: usize, value: T, meta: FrameMeta) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], meta)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.width)
    }

    /// Same geometry and metadata, samples replaced by `f(sample)`.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            width: self.width,
            height: self.height,
            meta: self.meta.clone(),
        }
    }

    pub fn with_data(&self, data: Vec<T>) -> Result<Self> {
        Self::new(self.width, self.height, data, self.meta.clone())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Convert to another scalar type.
    pub fn cast<U: Real>(&self) -> RawFrame<U> {
        RawFrame {
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
            width: self.width,
            height: self.height,
            meta: self.meta.clone(),
        }
    }

    /// Clamp into `[0, white_level - black_level]`.
    pub fn clamp_to_range(&mut self) {
        let hi = T::of(self.meta.range_max() as f64);
        for v in &mut self.data {
            *v = v.max(T::zero()).min(hi);
        }
    }
}

/// Four half-resolution planes in quad order (0,0), (0,1), (1,0), (1,1).
#[derive(Debug, Clone, PartialEq)]
pub struct BayerPlanes<T> {
    pub planes: [Vec<T>; 4],
    pub width: usize,
    pub height: usize,
}

/// Split a mosaic into its four colour planes; inverse of [`unpack_bayer`].
pub fn pack_bayer<T: Real>(frame: &RawFrame<T>) -> Result<BayerPlanes<T>> {
    let (w, h) = (frame.width, frame.height);
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::Shape(format!("cannot pack odd-sized {w}x{h} frame")));
    }
    let (pw, ph) = (w / 2, h / 2);
    let mut planes: [Vec<T>; 4] = std::array::from_fn(|_| Vec::with_capacity(pw * ph));
    for y in 0..h {
        let row = frame.row(y);
        let base = (y % 2) * 2;
        for (x, &v) in row.iter().enumerate() {
            planes[base + x % 2].push(v);
        }
    }
    Ok(BayerPlanes {
        planes,
        width: pw,
        height: ph,
    })
}

pub fn unpack_bayer<T: Real>(planes: &BayerPlanes<T>, meta: FrameMeta) -> Result<RawFrame<T>> {
    let (pw, ph) = (planes.width, planes.height);
    if planes.planes.iter().any(|p| p.len() != pw * ph) {
        return Err(Error::Shape("plane sizes disagree with declared geometry".into()));
    }
    let (w, h) = (pw * 2, ph * 2);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let base = (y % 2) * 2;
        let py = y / 2;
        for x in 0..w {
            data.push(planes.planes[base + x % 2][py * pw + x / 2]);
        }
    }
    RawFrame::new(w, h, data, meta)
}
