//! Centered 2D Fourier spectrum of bias frames and banding energy ratios.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::frame::RawFrame;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct BandingSpectrum {
    pub width: usize,
    pub height: usize,
    /// Row-major magnitudes with DC at `(height / 2, width / 2)`.
    pub magnitudes: Vec<f64>,
    /// Mean magnitude on the zero-horizontal-frequency column (without DC)
    /// over the mean magnitude of every bin off that column. Row noise puts
    /// its energy there; values well above 1 flag banding.
    pub banding_ratio: f64,
    /// Same ratio for the zero-vertical-frequency row (column noise).
    pub horizontal_ratio: f64,
}

impl BandingSpectrum {
    /// Mean magnitude of each centered column, a 1D summary for plotting.
    pub fn column_profile(&self) -> Vec<f64> {
        let mut prof = vec![0.0; self.width];
        for row in self.magnitudes.chunks_exact(self.width) {
            for (p, m) in prof.iter_mut().zip(row) {
                *p += m;
            }
        }
        prof.iter_mut().for_each(|p| *p /= self.height as f64);
        prof
    }
}

fn ratio(on: f64, n_on: usize, off: f64, n_off: usize) -> f64 {
    let on = on / n_on.max(1) as f64;
    let off = off / n_off.max(1) as f64;
    if off > 0.0 {
        on / off
    } else if on > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Centered magnitude spectrum of a (black-level-subtracted) bias frame.
pub fn banding_spectrum<T: Real>(bias: &RawFrame<T>) -> BandingSpectrum {
    let (w, h) = (bias.width(), bias.height());
    let mut buf: Vec<Complex<f64>> = bias.data().iter().map(|v| Complex::new(v.as_f64(), 0.0)).collect();
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft_forward(w);
    for row in buf.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(h);
    let mut col = vec![Complex::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = buf[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            buf[y * w + x] = col[y];
        }
    }

    let (cx, cy) = (w / 2, h / 2);
    let mut magnitudes = vec![0.0; w * h];
    for y in 0..h {
        let sy = (y + cy) % h;
        for x in 0..w {
            let sx = (x + cx) % w;
            magnitudes[sy * w + sx] = buf[y * w + x].norm();
        }
    }

    let (mut vline, mut voff, mut hline, mut hoff) = (0.0, 0.0, 0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            let m = magnitudes[y * w + x];
            if x == cx {
                if y != cy {
                    vline += m;
                }
            } else {
                voff += m;
            }
            if y == cy {
                if x != cx {
                    hline += m;
                }
            } else {
                hoff += m;
            }
        }
    }
    BandingSpectrum {
        width: w,
        height: h,
        banding_ratio: ratio(vline, h - 1, voff, (w - 1) * h),
        horizontal_ratio: ratio(hline, w - 1, hoff, w * (h - 1)),
        magnitudes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::FrameMeta;

    #[test]
    fn pure_row_offsets_live_on_the_vertical_line() {
        let (w, h) = (32, 16);
        let data: Vec<f64> = (0..w * h).map(|i| ((i / w) as f64 * 1.7).sin() * 5.0 + 2.0).collect();
        let f = RawFrame::new(w, h, data, FrameMeta::default()).unwrap();
        let s = banding_spectrum(&f);
        for y in 0..h {
            for x in 0..w {
                if x != w / 2 {
                    assert!(s.magnitudes[y * w + x] < 1e-9);
                }
            }
        }
        // DC holds the frame sum
        let sum: f64 = f.data().iter().sum();
        assert!((s.magnitudes[(h / 2) * w + w / 2] - sum.abs()).abs() < 1e-9);
        assert!(s.banding_ratio > 1e6);
    }

    #[test]
    fn pure_column_offsets_live_on_the_horizontal_line() {
        let (w, h) = (16, 16);
        let data: Vec<f64> = (0..w * h).map(|i| ((i % w) as f64 * 0.9).cos()).collect();
        let f = RawFrame::new(w, h, data, FrameMeta::default()).unwrap();
        let s = banding_spectrum(&f);
        assert!(s.horizontal_ratio > 1e6);
        assert!(s.banding_ratio < 1e-6);
        assert_eq!(s.column_profile().len(), w);
    }

    #[test]
    fn constant_frame_is_neutral() {
        let f = RawFrame::filled(8, 8, 0.0f32, FrameMeta::default()).unwrap();
        assert_eq!(banding_spectrum(&f).banding_ratio, 1.0);
    }
}
