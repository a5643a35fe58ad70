//! Row (banding) noise scale from bias frames.

use rayon::prelude::*;

use super::FrameSet;
use crate::error::{Error, Result};
use crate::frame::RawFrame;
use crate::scalar::Real;

/// Fewest rows (over all frames) the estimator accepts.
pub const MIN_ROWS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct RowNoiseEstimate {
    pub sigma_r: f64,
    /// Row means of every frame, centered on their frame's mean, frame after frame.
    pub row_means: Vec<f64>,
    /// Mean square of the centered row means, before the correction.
    pub raw_mean_square: f64,
    /// Pooled within-row pixel variance.
    pub pixel_variance: f64,
}

struct FrameRowStats {
    means: Vec<f64>,
    within_ss: f64,
}

fn row_stats<T: Real>(f: &RawFrame<T>) -> FrameRowStats {
    let w = f.width() as f64;
    let (means, ss): (Vec<f64>, Vec<f64>) = f
        .data()
        .par_chunks(f.width())
        .map(|row| {
            let m = row.iter().map(|v| v.as_f64()).sum::<f64>() / w;
            let ss = row.iter().map(|v| (v.as_f64() - m).powi(2)).sum::<f64>();
            (m, ss)
        })
        .unzip();
    FrameRowStats {
        means,
        within_ss: ss.iter().sum(),
    }
}

/// Per-row means of a frame.
pub fn row_means<T: Real>(f: &RawFrame<T>) -> Vec<f64> {
    row_stats(f).means
}

/// The frame with each row's mean removed; every row of the result averages zero.
pub fn subtract_row_means<T: Real>(f: &RawFrame<T>) -> RawFrame<f64> {
    let means = row_means(f);
    let w = f.width();
    let data: Vec<f64> = f
        .data()
        .iter()
        .enumerate()
        .map(|(i, v)| v.as_f64() - means[i / w])
        .collect();
    RawFrame::new(w, f.height(), data, f.meta.clone()).expect("same geometry")
}

/// Maximum-likelihood row-noise scale with pixel-noise shrinkage.
///
/// Row means carry the row offset plus the average of `width` pixel-noise
/// samples, so `σ_r² = max(0, mean(rowmean²) - σ_pix² / width)`. Row means are
/// centered per frame (a residual black-level offset is not row noise), with
/// the matching `H / (H - 1)` degrees-of-freedom factor.
pub fn estimate_row_noise<T: Real>(bias: &FrameSet<T>) -> Result<RowNoiseEstimate> {
    let (w, h) = (bias.width(), bias.height());
    let total_rows = h * bias.frames.len();
    if total_rows < MIN_ROWS {
        return Err(Error::InsufficientData(format!(
            "row noise needs >= {MIN_ROWS} rows, got {total_rows}"
        )));
    }
    let mut centered = Vec::with_capacity(total_rows);
    let mut within = 0.0;
    for f in &bias.frames {
        let st = row_stats(f);
        let m = st.means.iter().sum::<f64>() / h as f64;
        centered.extend(st.means.iter().map(|v| v - m));
        within += st.within_ss;
    }
    let dof_rows = (h as f64 - 1.0) * bias.frames.len() as f64;
    let raw_mean_square = centered.iter().map(|v| v * v).sum::<f64>() / dof_rows;
    let pixel_variance = within / (total_rows as f64 * (w as f64 - 1.0));
    let sigma2 = (raw_mean_square - pixel_variance / w as f64).max(0.0);
    Ok(RowNoiseEstimate {
        sigma_r: sigma2.sqrt(),
        row_means: centered,
        raw_mean_square,
        pixel_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::FrameMeta;

    #[test]
    fn constant_bias_has_no_row_noise() {
        for v in [0.0, 3.5] {
            let f = RawFrame::filled(8, 16, v, FrameMeta::default()).unwrap();
            let est = estimate_row_noise(&FrameSet::biases(vec![f]).unwrap()).unwrap();
            assert_eq!(est.sigma_r, 0.0);
        }
    }

    #[test]
    fn too_few_rows() {
        let f = RawFrame::filled(8, 4, 0.0, FrameMeta::default()).unwrap();
        let set = FrameSet::biases(vec![f.clone(), f.clone(), f]).unwrap();
        assert!(matches!(estimate_row_noise(&set), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn pure_offsets_are_recovered() {
        // offsets ±2 alternate: centered mean square with the H/(H-1) factor
        let (w, h) = (6, 16);
        let data: Vec<f64> = (0..w * h).map(|i| if (i / w) % 2 == 0 { 2.0 } else { -2.0 }).collect();
        let f = RawFrame::new(w, h, data, FrameMeta::default()).unwrap();
        let est = estimate_row_noise(&FrameSet::biases(vec![f]).unwrap()).unwrap();
        let expect = (4.0 * h as f64 / (h as f64 - 1.0)).sqrt();
        assert!((est.sigma_r - expect).abs() < 1e-12);
        assert_eq!(est.pixel_variance, 0.0);
    }

    #[test]
    fn row_mean_subtraction_zeroes_rows() {
        let data: Vec<f64> = (0..12 * 6).map(|i| ((i * 31) % 17) as f64 * 0.37).collect();
        let f = RawFrame::new(12, 6, data, FrameMeta::default()).unwrap();
        let r = subtract_row_means(&f);
        for row in r.rows() {
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
    }
}
