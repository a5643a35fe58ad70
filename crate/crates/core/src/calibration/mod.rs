//! Per-ISO noise parameter estimation from flat-field and bias frames, and
//! the joint log-linear model fitted across ISO settings.

mod banding;
mod fit;
mod frameset;
mod gain;
mod probplot;
mod rownoise;
mod shapiro;

use std::collections::BTreeMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

pub use banding::{banding_spectrum, BandingSpectrum};
pub use fit::{exact_joint_model, fit_joint_model, fit_line, IsoParams};
pub use frameset::FrameSet;
pub use gain::{estimate_gain, GainEstimate, TransferPoint, MAX_LEVEL_FRACTION};
pub use probplot::{
    default_lambda_grid, filliben_positions, ppcc_fit, probability_plot, probability_plot_points,
    probability_plot_sorted, tukey_quantile_fn, fit_tukey_lambda, PpccFit, ProbPlotFit, QuantizedTukey, TukeyFit,
    DEFAULT_TRIM, GAUSSIAN_LIKE_LAMBDA,
};
pub use rownoise::{estimate_row_noise, row_means, subtract_row_means, RowNoiseEstimate, MIN_ROWS};
pub use shapiro::{shapiro_wilk, ShapiroWilk, SHAPIRO_MAX_N};

use crate::distributions::normal_quantile;
use crate::error::{Error, Result};
use crate::rng::{tags, RngStream};
use crate::scalar::Real;
use crate::synthesis::JointParamModel;

/// Significance level of the normality decision.
pub const NORMALITY_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    /// Seed of the subsampling stream.
    pub seed: u64,
    /// Residual pixels used for the PPCC search and the probability plots.
    pub max_fit_samples: usize,
    pub lambda_grid: Vec<f64>,
    pub shapiro_max_n: usize,
    /// Points kept per probability plot in the report.
    pub plot_points: usize,
    /// Tail fraction left out of the shape and scale fit at each end.
    pub trim: f64,
    /// Rounding step of the bias samples in DN. `None` detects it: 1 when
    /// every bias sample is an integer, otherwise 0 (no rounding).
    pub quant_step: Option<f64>,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            max_fit_samples: 200_000,
            lambda_grid: default_lambda_grid(),
            shapiro_max_n: SHAPIRO_MAX_N,
            plot_points: 200,
            trim: DEFAULT_TRIM,
            quant_step: None,
        }
    }
}

/// Diagnostics and estimates of one ISO calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub iso: u32,
    pub k_hat: f64,
    pub lambda_hat: f64,
    pub sigma_tl_hat: f64,
    pub sigma_r_hat: f64,
    /// Shapiro-Wilk on the row means (row noise normality).
    pub shapiro_w: f64,
    pub shapiro_p: f64,
    pub row_noise_gaussian: bool,
    /// Shapiro-Wilk on the row-corrected residual read noise.
    pub residual_shapiro_w: f64,
    pub residual_shapiro_p: f64,
    /// Residuals look Gaussian at α = 0.05; λ is estimated regardless.
    pub residual_gaussian_adequate: bool,
    /// R² of the full Gaussian probability plot of the residuals.
    pub r2_gauss: f64,
    /// R² of the full Tukey lambda (λ̂) probability plot of the residuals.
    pub r2_tl: f64,
    pub banding_ratio: f64,
    pub horizontal_ratio: f64,
    /// Rounding step modeled in the shape and scale fit.
    pub quant_step: f64,
    /// PPCC of the trimmed fit over the λ grid.
    pub ppcc_curve: Vec<(f64, f64)>,
    /// Frequency of the characteristic-function photon transfer, 1/DN.
    pub transfer_frequency: f64,
    pub transfer_curve: Vec<TransferPoint>,
    /// (theoretical quantile, order statistic) pairs.
    pub gauss_plot: Vec<(f64, f64)>,
    pub tl_plot: Vec<(f64, f64)>,
    pub spectrum_column_profile: Vec<f64>,
}

impl CalibrationReport {
    pub fn params(&self) -> IsoParams {
        IsoParams {
            k: self.k_hat,
            lambda: self.lambda_hat,
            sigma_tl: self.sigma_tl_hat,
            sigma_r: self.sigma_r_hat,
        }
    }
}

/// Random subsample of row-mean-corrected bias pixels.
fn residual_sample<T: Real>(biases: &FrameSet<T>, n: usize, rng: &RngStream) -> Vec<f64> {
    let (w, h) = (biases.width(), biases.height());
    let per_frame = w * h;
    let total = per_frame * biases.frames.len();
    let raw_means: Vec<Vec<f64>> = biases.frames.iter().map(row_means).collect();
    let pick = |i: usize| {
        let (fi, off) = (i / per_frame, i % per_frame);
        biases.frames[fi].data()[off].as_f64() - raw_means[fi][off / w]
    };
    if total <= n {
        (0..total).map(pick).collect()
    } else {
        let mut idx = index::sample(&mut rng.rng(), total, n).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(pick).collect()
    }
}

/// 1 DN when every bias sample sits on the integer grid, else 0.
fn detect_quant_step<T: Real>(biases: &FrameSet<T>) -> f64 {
    let integral = biases
        .frames
        .iter()
        .all(|f| f.data().iter().all(|v| v.as_f64().fract() == 0.0));
    if integral {
        1.0
    } else {
        0.0
    }
}

/// Estimate K, λ, σ_TL and σ_r for one ISO and collect the fit diagnostics.
///
/// Order: photon transfer gain on the flats; banding spectrum of the first
/// bias; row noise from the bias row means; row means subtracted and a pixel
/// subsample pooled; Shapiro-Wilk on both; the trimmed PPCC search for λ̂
/// with the matching scale σ̂_TL (modeling the rounding step of integer
/// data); full Gaussian and Tukey lambda probability plots for the R² pair.
pub fn calibrate_iso<T: Real>(
    flats: &FrameSet<T>,
    biases: &FrameSet<T>,
    options: &CalibrationOptions,
) -> Result<CalibrationReport> {
    if flats.iso() != biases.iso() {
        return Err(Error::Config(format!(
            "flats at ISO {} but biases at ISO {}",
            flats.iso(),
            biases.iso()
        )));
    }
    let base = RngStream::new(options.seed, biases.iso() as u64).substream(tags::SUBSAMPLE);

    let gain = estimate_gain(flats)?;
    let spectrum = banding_spectrum(&biases.frames[0]);
    let rows = estimate_row_noise(biases)?;
    let row_sw = shapiro_wilk(&rows.row_means, options.shapiro_max_n, &base.substream(0))?;

    let mut resid = residual_sample(biases, options.max_fit_samples, &base.substream(1));
    let resid_sw = shapiro_wilk(&resid, options.shapiro_max_n, &base.substream(2))?;
    resid.sort_by(f64::total_cmp);

    let q = options.quant_step.unwrap_or_else(|| detect_quant_step(biases));
    let gauss = probability_plot_sorted(&resid, normal_quantile)?;
    let shape = fit_tukey_lambda(&resid, &options.lambda_grid, options.trim, q)?;
    let tl_q = tukey_quantile_fn(shape.lambda);
    let tl = probability_plot_sorted(&resid, tl_q)?;

    Ok(CalibrationReport {
        iso: biases.iso(),
        k_hat: gain.k,
        lambda_hat: shape.lambda,
        sigma_tl_hat: shape.sigma,
        sigma_r_hat: rows.sigma_r,
        shapiro_w: row_sw.w,
        shapiro_p: row_sw.p_value,
        row_noise_gaussian: row_sw.is_normal(NORMALITY_ALPHA),
        residual_shapiro_w: resid_sw.w,
        residual_shapiro_p: resid_sw.p_value,
        residual_gaussian_adequate: resid_sw.is_normal(NORMALITY_ALPHA),
        r2_gauss: gauss.r2,
        r2_tl: tl.r2,
        banding_ratio: spectrum.banding_ratio,
        horizontal_ratio: spectrum.horizontal_ratio,
        quant_step: q,
        ppcc_curve: shape.curve,
        transfer_frequency: gain.frequency,
        transfer_curve: gain.points,
        gauss_plot: probability_plot_points(&resid, normal_quantile, options.plot_points),
        tl_plot: probability_plot_points(&resid, tl_q, options.plot_points),
        spectrum_column_profile: spectrum.column_profile(),
    })
}

/// Calibrated parameters of a camera across ISO settings plus the joint model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraProfile {
    pub camera_id: String,
    pub per_iso: BTreeMap<u32, IsoParams>,
    pub joint: JointParamModel,
}

impl CameraProfile {
    /// Fit the joint model from per-ISO estimates. Fewer than three ISO
    /// settings fall back to [`exact_joint_model`].
    pub fn from_per_iso(camera_id: impl Into<String>, per_iso: BTreeMap<u32, IsoParams>) -> Result<Self> {
        if per_iso.is_empty() {
            return Err(Error::InsufficientData("profile needs at least one ISO".into()));
        }
        let joint = if per_iso.len() >= 3 {
            fit_joint_model(&per_iso)?
        } else {
            exact_joint_model(&per_iso)?
        };
        Ok(Self {
            camera_id: camera_id.into(),
            per_iso,
            joint,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_iso.is_empty() {
            return Err(Error::Config("profile has no ISO entries".into()));
        }
        self.joint.validate()
    }
}
