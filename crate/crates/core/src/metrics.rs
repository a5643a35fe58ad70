//! Raw-domain evaluation: brightness alignment, PSNR and SSIM on packed planes.
//!
//! SSIM uses the usual constants `K1 = 0.01`, `K2 = 0.03` and an 11-tap
//! Gaussian window with σ = 1.5, evaluated over the valid region of each
//! Bayer plane. Planes smaller than the window use a single global window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{pack_bayer, RawFrame};
use crate::scalar::Real;

const K1: f64 = 0.01;
const K2: f64 = 0.03;
const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;

fn check_pair<T: Real>(x: &RawFrame<T>, y: &RawFrame<T>) -> Result<()> {
    if x.same_shape(y) {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "{}x{} vs {}x{}",
            x.width(),
            x.height(),
            y.width(),
            y.height()
        )))
    }
}

/// Scalar `c` minimising `‖c·x − y‖²`, i.e. `Σxy / Σxx`.
pub fn brightness_align<T: Real>(x: &RawFrame<T>, y: &RawFrame<T>) -> Result<f64> {
    check_pair(x, y)?;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.data().iter().zip(y.data()) {
        let (a, b) = (a.as_f64(), b.as_f64());
        sxy += a * b;
        sxx += a * a;
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("cannot align an all-zero frame".into()));
    }
    Ok(sxy / sxx)
}

fn check_peak(peak: f64) -> Result<()> {
    if peak > 0.0 && peak.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("peak {peak} must be > 0")))
    }
}

fn plane_mse<T: Real>(x: &[T], y: &[T]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a.as_f64() - b.as_f64()).powi(2))
        .sum::<f64>()
        / x.len() as f64
}

/// PSNR in dB of the MSE averaged over the four Bayer planes; `+inf` when
/// identical. Averaging the MSE (not the per-plane dB) keeps PSNR monotone in
/// total squared error, so brightness alignment can only raise it.
pub fn psnr<T: Real>(x: &RawFrame<T>, y: &RawFrame<T>, peak: f64) -> Result<f64> {
    check_pair(x, y)?;
    check_peak(peak)?;
    let (px, py) = (pack_bayer(x)?, pack_bayer(y)?);
    let mse = px
        .planes
        .iter()
        .zip(&py.planes)
        .map(|(a, b)| plane_mse(a, b))
        .sum::<f64>()
        / 4.0;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    })
}

fn gaussian_taps() -> [f64; WINDOW] {
    let c = (WINDOW / 2) as f64;
    let mut t = [0.0; WINDOW];
    for (i, v) in t.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
    }
    let s: f64 = t.iter().sum();
    t.iter_mut().for_each(|v| *v /= s);
    t
}

/// Valid-region separable filter of a `w × h` image.
fn filter_valid(img: &[f64], w: usize, h: usize, taps: &[f64]) -> (Vec<f64>, usize, usize) {
    let k = taps.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &img[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = taps.iter().zip(&row[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(j, t)| t * tmp[(y + j) * ow + x]).sum();
        }
    }
    (out, ow, oh)
}

fn ssim_terms(mx: f64, my: f64, sxx: f64, syy: f64, sxy: f64, c1: f64, c2: f64) -> f64 {
    ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2))
}

fn plane_ssim(x: &[f64], y: &[f64], w: usize, h: usize, peak: f64) -> f64 {
    let c1 = (K1 * peak).powi(2);
    let c2 = (K2 * peak).powi(2);
    if w < WINDOW || h < WINDOW {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxx = x.iter().map(|v| v * v).sum::<f64>() / n - mx * mx;
        let syy = y.iter().map(|v| v * v).sum::<f64>() / n - my * my;
        let sxy = x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / n - mx * my;
        return ssim_terms(mx, my, sxx, syy, sxy, c1, c2);
    }
    let taps = gaussian_taps();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let (mx, _, _) = filter_valid(x, w, h, &taps);
    let (my, _, _) = filter_valid(y, w, h, &taps);
    let (ex2, _, _) = filter_valid(&xx, w, h, &taps);
    let (ey2, _, _) = filter_valid(&yy, w, h, &taps);
    let (exy, _, _) = filter_valid(&xy, w, h, &taps);
    let n = mx.len() as f64;
    (0..mx.len())
        .map(|i| {
            let (a, b) = (mx[i], my[i]);
            ssim_terms(a, b, ex2[i] - a * a, ey2[i] - b * b, exy[i] - a * b, c1, c2)
        })
        .sum::<f64>()
        / n
}

/// Mean SSIM averaged over the four Bayer planes.
pub fn ssim<T: Real>(x: &RawFrame<T>, y: &RawFrame<T>, peak: f64) -> Result<f64> {
    check_pair(x, y)?;
    check_peak(peak)?;
    let (px, py) = (pack_bayer(x)?, pack_bayer(y)?);
    let (w, h) = (px.width, px.height);
    let mut acc = 0.0;
    for (a, b) in px.planes.iter().zip(&py.planes) {
        let a: Vec<f64> = a.iter().map(|v| v.as_f64()).collect();
        let b: Vec<f64> = b.iter().map(|v| v.as_f64()).collect();
        acc += plane_ssim(&a, &b, w, h, peak);
    }
    Ok(acc / 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub psnr: f64,
    pub ssim: f64,
    /// Scalar applied to the prediction before scoring (1 without alignment).
    pub align_scalar: f64,
}

/// Score `pred` against `reference`, optionally after brightness alignment.
pub fn evaluate<T: Real>(pred: &RawFrame<T>, reference: &RawFrame<T>, peak: f64, align: bool) -> Result<EvalResult> {
    let c = if align { brightness_align(pred, reference)? } else { 1.0 };
    let scaled;
    let p = if align {
        let cv = T::of(c);
        scaled = pred.map(|v| v * cv);
        &scaled
    } else {
        pred
    };
    Ok(EvalResult {
        psnr: psnr(p, reference, peak)?,
        ssim: ssim(p, reference, peak)?,
        align_scalar: c,
    })
}
