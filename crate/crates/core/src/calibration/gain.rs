//! Photon transfer gain estimation from flat-field pairs.
//!
//! The gain comes from the characteristic function of pair differences
//! rather than their variance. For `d = a - b` at a level with mean `m`,
//! shot noise gives `-ln|φ_d(t)| = 2 (m / K) (1 - cos Kt) + c(t)`, where
//! `c(t)` collects the signal-independent read, row and rounding terms. The
//! empirical characteristic function is bounded, so read noise without a
//! finite variance (Tukey lambda with λ <= -0.5) cannot swamp the fit the way
//! it swamps a sample variance.

use serde::{Deserialize, Serialize};

use super::fit::fit_line;
use super::FrameSet;
use crate::error::{Error, Result};
use crate::frame::RawFrame;
use crate::scalar::Real;
use crate::synthesis::FitLine;

/// Levels whose mean exceeds this fraction of the valid range are dropped
/// from the fit (clipping bends the transfer curve).
pub const MAX_LEVEL_FRACTION: f64 = 0.6;

/// One illumination level of the photon transfer curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferPoint {
    pub mean: f64,
    /// Temporal variance: half the variance of pair differences.
    pub variance: f64,
    /// `-ln|φ_d(t)|` of the pair differences at the common frequency.
    pub log_cf: f64,
    pub pairs: usize,
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainEstimate {
    pub k: f64,
    /// Frequency at which the characteristic function was evaluated, 1/DN.
    pub frequency: f64,
    /// `log_cf` against mean over the used levels.
    pub line: FitLine,
    /// Classic variance-mean line over the same levels, for reference.
    pub variance_line: FitLine,
    pub points: Vec<TransferPoint>,
}

/// Central half of the frame in each dimension.
fn central_window(w: usize, h: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    if w < 8 || h < 8 {
        (0..w, 0..h)
    } else {
        (w / 4..w - w / 4, h / 4..h - h / 4)
    }
}

fn central_mean<T: Real>(f: &RawFrame<T>) -> f64 {
    let (xs, ys) = central_window(f.width(), f.height());
    let n = (xs.len() * ys.len()) as f64;
    ys.map(|y| f.row(y)[xs.clone()].iter().map(|v| v.as_f64()).sum::<f64>())
        .sum::<f64>()
        / n
}

/// Mean signal and central-window differences of a frame pair.
fn pair_diff<T: Real>(a: &RawFrame<T>, b: &RawFrame<T>) -> (f64, Vec<f64>) {
    let (xs, ys) = central_window(a.width(), a.height());
    let mut d = Vec::with_capacity(xs.len() * ys.len());
    let mut sum = 0.0;
    for y in ys {
        let (ra, rb) = (&a.row(y)[xs.clone()], &b.row(y)[xs.clone()]);
        for (va, vb) in ra.iter().zip(rb) {
            let (va, vb) = (va.as_f64(), vb.as_f64());
            sum += va + vb;
            d.push(va - vb);
        }
    }
    (sum / (2 * d.len()) as f64, d)
}

/// Half the sample variance of the differences.
fn half_variance(d: &[f64]) -> f64 {
    let n = d.len() as f64;
    let m = d.iter().sum::<f64>() / n;
    0.5 * d.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// `-ln|mean(exp(i t d))|`, insensitive to a mean offset between frames.
fn log_cf(d: &[f64], t: f64) -> f64 {
    let (mut c, mut s) = (0.0, 0.0);
    for v in d {
        let (sv, cv) = (t * v).sin_cos();
        c += cv;
        s += sv;
    }
    let n = d.len() as f64;
    -(c / n).hypot(s / n).ln()
}

fn interquartile_range(d: &[f64]) -> f64 {
    let mut v = d.to_vec();
    let n = v.len();
    let (_, q1, _) = v.select_nth_unstable_by(n / 4, f64::total_cmp);
    let q1 = *q1;
    let (_, q3, _) = v.select_nth_unstable_by(3 * n / 4, f64::total_cmp);
    *q3 - q1
}

/// Largest `x` on the rising branch of `(1 - cos x) / x`.
const CF_BRANCH_END: f64 = 2.331_122_370_414_423;

/// Solve `(1 - cos x) / x = r` on `(0, CF_BRANCH_END)`.
fn invert_cf_slope(r: f64) -> Option<f64> {
    let f = |x: f64| (1.0 - x.cos()) / x;
    if !(r > 0.0 && r < f(CF_BRANCH_END)) {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, CF_BRANCH_END);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // 1 - cos x = 2 sin²(x/2) keeps precision for small x
        if 2.0 * (0.5 * mid).sin().powi(2) / mid < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Group frame indices by illumination tag; untagged frames are grouped by
/// their central mean (within 5% of the group's first member).
fn group_levels<T: Real>(flats: &FrameSet<T>) -> Vec<Vec<usize>> {
    let mut groups: Vec<(Option<f64>, f64, Vec<usize>)> = Vec::new();
    let mut untagged: Vec<(f64, usize)> = Vec::new();
    for (i, (f, tag)) in flats.frames.iter().zip(&flats.levels).enumerate() {
        match tag {
            Some(t) => match groups.iter_mut().find(|g| g.0 == Some(*t)) {
                Some(g) => g.2.push(i),
                None => groups.push((Some(*t), 0.0, vec![i])),
            },
            None => untagged.push((central_mean(f), i)),
        }
    }
    untagged.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (m, i) in untagged {
        match groups.last_mut() {
            Some(g) if g.0.is_none() && (m - g.1).abs() <= 0.05 * g.1.abs() + 1.0 => g.2.push(i),
            _ => groups.push((None, m, vec![i])),
        }
    }
    groups.into_iter().map(|g| g.2).collect()
}

/// Photon transfer over illumination levels.
///
/// Each level needs at least one pair of frames; differencing a pair cancels
/// fixed-pattern structure. The characteristic function of the differences
/// is evaluated at one frequency `t = sqrt(2) / s`, where `s` is the
/// Gaussian-equivalent IQR scale of the brightest used level. A line through
/// `(mean, -ln|φ|)` has slope `2 (1 - cos Kt) / K`, which is inverted for `K`.
/// Scaling every frame by `a` scales `K` by exactly `a`.
pub fn estimate_gain<T: Real>(flats: &FrameSet<T>) -> Result<GainEstimate> {
    let limit = MAX_LEVEL_FRACTION * flats.frames[0].meta.range_max() as f64;
    let mut levels: Vec<(f64, Vec<Vec<f64>>)> = Vec::new();
    for group in group_levels(flats) {
        let pairs: Vec<(f64, Vec<f64>)> = group
            .chunks_exact(2)
            .map(|p| pair_diff(&flats.frames[p[0]], &flats.frames[p[1]]))
            .collect();
        if pairs.is_empty() {
            continue;
        }
        let mean = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
        levels.push((mean, pairs.into_iter().map(|p| p.1).collect()));
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    let used = levels.iter().filter(|l| l.0 < limit).count();
    if used < 2 {
        return Err(Error::InsufficientData(format!(
            "photon transfer needs >= 2 illumination levels below {:.0} DN with a frame pair each, got {used}",
            limit
        )));
    }

    let brightest = &levels[used - 1].1;
    let iqr = brightest.iter().map(|d| interquartile_range(d)).sum::<f64>() / brightest.len() as f64;
    if !(iqr > 0.0) {
        return Err(Error::CalibrationFailure("flat pair differences have no spread".into()));
    }
    // IQR of a unit Gaussian
    let scale = iqr / 1.348_979_500_392_163_5;
    let t = std::f64::consts::SQRT_2 / scale;

    let points: Vec<TransferPoint> = levels
        .iter()
        .map(|(mean, diffs)| {
            let np = diffs.len() as f64;
            TransferPoint {
                mean: *mean,
                variance: diffs.iter().map(|d| half_variance(d)).sum::<f64>() / np,
                log_cf: diffs.iter().map(|d| log_cf(d, t)).sum::<f64>() / np,
                pairs: diffs.len(),
                used: *mean < limit,
            }
        })
        .collect();
    let used_pts: Vec<&TransferPoint> = points.iter().filter(|p| p.used).collect();
    let x: Vec<f64> = used_pts.iter().map(|p| p.mean).collect();
    let y: Vec<f64> = used_pts.iter().map(|p| p.log_cf).collect();
    let v: Vec<f64> = used_pts.iter().map(|p| p.variance).collect();
    let coincide = |e: Error| match e {
        Error::Degenerate(m) => Error::CalibrationFailure(format!("flat levels coincide: {m}")),
        other => other,
    };
    let line = fit_line(&x, &y).map_err(coincide)?;
    let variance_line = fit_line(&x, &v).map_err(coincide)?;
    let k = invert_cf_slope(line.slope / (2.0 * t))
        .map(|kt| kt / t)
        .filter(|k| k.is_finite() && *k > 0.0)
        .ok_or_else(|| Error::CalibrationFailure(format!("photon transfer slope {} has no valid gain", line.slope)))?;
    Ok(GainEstimate {
        k,
        frequency: t,
        line,
        variance_line,
        points,
    })
}
