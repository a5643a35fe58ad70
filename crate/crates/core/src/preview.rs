//! Linear, non-colorimetric previews for eyeballing frames.

use crate::frame::{pack_bayer, Channel, RawFrame};
use crate::error::Result;
use crate::scalar::Real;

/// Half-resolution 8-bit RGB image.
#[derive(Debug, Clone, PartialEq)]
pub struct PreviewImage {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

/// Average each quad's colours into one RGB pixel and scale globally so the
/// 99.5th percentile maps to 255. No white balance, no gamma.
pub fn linear_preview<T: Real>(frame: &RawFrame<T>) -> Result<PreviewImage> {
    let planes = pack_bayer(frame)?;
    let chans = frame.meta.bayer_pattern.channels();
    let n = planes.width * planes.height;
    let mut rgb = vec![0.0f64; 3 * n];
    let mut counts = [0.0f64; 3];
    for (plane, ch) in planes.planes.iter().zip(chans) {
        let c = match ch {
            Channel::Red => 0,
            Channel::Green => 1,
            Channel::Blue => 2,
        };
        counts[c] += 1.0;
        for (i, v) in plane.iter().enumerate() {
            rgb[3 * i + c] += v.as_f64();
        }
    }
    for px in rgb.chunks_exact_mut(3) {
        for c in 0..3 {
            px[c] /= counts[c];
        }
    }
    let mut sorted = rgb.clone();
    sorted.sort_by(f64::total_cmp);
    let hi = sorted[((sorted.len() - 1) as f64 * 0.995).round() as usize].max(f64::MIN_POSITIVE);
    Ok(PreviewImage {
        width: planes.width,
        height: planes.height,
        rgb: rgb.iter().map(|v| (v / hi * 255.0).round().clamp(0.0, 255.0) as u8).collect(),
    })
}
