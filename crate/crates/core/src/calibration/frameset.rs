use crate::error::{Error, Result};
use crate::frame::{FrameKind, RawFrame};
use crate::scalar::Real;

/// Frames of one camera at one ISO, all with the same geometry.
#[derive(Debug, Clone)]
pub struct FrameSet<T> {
    pub frames: Vec<RawFrame<T>>,
    pub kind: FrameKind,
    /// Optional illumination tag per frame (flats only).
    pub levels: Vec<Option<f64>>,
}

impl<T: Real> FrameSet<T> {
    pub fn new(frames: Vec<RawFrame<T>>, kind: FrameKind, levels: Vec<Option<f64>>) -> Result<Self> {
        let min = match kind {
            FrameKind::Flat => 2,
            FrameKind::Bias => 1,
            other => return Err(Error::Config(format!("frame set of kind {other:?}"))),
        };
        if frames.len() < min {
            return Err(Error::InsufficientData(format!(
                "{kind:?} set needs >= {min} frames, got {}",
                frames.len()
            )));
        }
        if levels.len() != frames.len() {
            return Err(Error::Shape(format!(
                "{} illumination tags for {} frames",
                levels.len(),
                frames.len()
            )));
        }
        let first = &frames[0];
        for f in &frames[1..] {
            if !f.same_shape(first) {
                return Err(Error::Shape("frames in a set must share geometry".into()));
            }
            if f.meta.camera_id != first.meta.camera_id || f.meta.iso != first.meta.iso {
                return Err(Error::Config("frames in a set must share camera and ISO".into()));
            }
        }
        Ok(Self { frames, kind, levels })
    }

    pub fn flats(frames: Vec<RawFrame<T>>, levels: Vec<Option<f64>>) -> Result<Self> {
        Self::new(frames, FrameKind::Flat, levels)
    }

    pub fn biases(frames: Vec<RawFrame<T>>) -> Result<Self> {
        let n = frames.len();
        Self::new(frames, FrameKind::Bias, vec![None; n])
    }

    pub fn iso(&self) -> u32 {
        self.frames[0].meta.iso
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }
}
