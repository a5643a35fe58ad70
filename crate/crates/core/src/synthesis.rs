//! Composite noise synthesis and the low-light darken/restore protocol.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{poisson_draw, uniform_draw, TukeyLambda};
use crate::error::{Error, Result};
use crate::frame::RawFrame;
use crate::params::{NoiseComponents, NoiseParams};
use crate::rng::{tags, RngStream};
use crate::scalar::Real;

/// Least-squares line with the unbiased residual standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitLine {
    #[serde(rename = "a")]
    pub slope: f64,
    #[serde(rename = "b")]
    pub intercept: f64,
    #[serde(rename = "sigma")]
    pub resid_std: f64,
    #[serde(rename = "n")]
    pub n_points: usize,
}

impl FitLine {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Conditional sampler for (K, σ_TL, σ_r, λ) fitted across ISO settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointParamModel {
    pub log_k_min: f64,
    pub log_k_max: f64,
    pub tl_line: FitLine,
    pub row_line: FitLine,
    pub lambda_pool: Vec<f64>,
}

impl JointParamModel {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_pool.is_empty() {
            return Err(Error::Config("lambda pool is empty".into()));
        }
        if !(self.log_k_min.is_finite() && self.log_k_max.is_finite()) || self.log_k_min > self.log_k_max {
            return Err(Error::Config(format!(
                "invalid log K bounds [{}, {}]",
                self.log_k_min, self.log_k_max
            )));
        }
        for line in [&self.tl_line, &self.row_line] {
            if !(line.resid_std >= 0.0) || !line.slope.is_finite() || !line.intercept.is_finite() {
                return Err(Error::Config(format!("invalid fit line {line:?}")));
            }
        }
        if let Some(l) = self.lambda_pool.iter().find(|l| !(l.abs() <= 1.0)) {
            return Err(Error::Config(format!("pooled λ = {l} outside [-1, 1]")));
        }
        Ok(())
    }
}

/// Draw one parameter set: log K uniform between the calibrated bounds, the
/// log scales Gaussian around their fitted lines, λ resampled from the pool.
/// The quantization step is fixed at 1 DN.
pub fn sample_noise_params<T: Real>(model: &JointParamModel, rng: &RngStream) -> Result<NoiseParams<T>> {
    model.validate()?;
    let mut r = rng.rng();
    let u: f64 = r.random();
    let log_k = model.log_k_min + u * (model.log_k_max - model.log_k_min);
    let z_tl: f64 = StandardNormal.sample(&mut r);
    let z_r: f64 = StandardNormal.sample(&mut r);
    let log_tl = model.tl_line.eval(log_k) + model.tl_line.resid_std * z_tl;
    let log_r = model.row_line.eval(log_k) + model.row_line.resid_std * z_r;
    let lambda = model.lambda_pool[r.random_range(0..model.lambda_pool.len())];
    Ok(NoiseParams {
        k: T::of(log_k.exp()),
        lambda: T::of(lambda),
        sigma_tl: T::of(log_tl.exp()),
        sigma_r: T::of(log_r.exp()),
        q: T::one(),
        enabled: NoiseComponents::ALL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub clip: bool,
    pub quantize_output: bool,
    pub components: NoiseComponents,
    /// ADC step used for the additive quantization component, in DN.
    pub quant_step: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            f_min: 100.0,
            f_max: 300.0,
            clip: true,
            quantize_output: true,
            components: NoiseComponents::ALL,
            quant_step: 1.0,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_min >= 1.0 && self.f_min <= self.f_max && self.f_max.is_finite()) {
            return Err(Error::Config(format!(
                "low-light factor bounds must satisfy 1 <= f_min <= f_max, got [{}, {}]",
                self.f_min, self.f_max
            )));
        }
        if !(self.quant_step >= 0.0 && self.quant_step.is_finite()) {
            return Err(Error::Config(format!("invalid quantization step {}", self.quant_step)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Units {
    Electrons,
    Dn,
}

/// Per-pixel sum of the enabled components, row-parallel.
///
/// Every component of every row reads its own substream, so the output does
/// not depend on how rows are scheduled, and toggling one component leaves
/// the draws of the others untouched.
fn apply_noise<T: Real>(
    base: &RawFrame<T>,
    units: Units,
    params: &NoiseParams<T>,
    rng: &RngStream,
    clip: bool,
) -> Result<RawFrame<T>> {
    params.validate()?;
    if let Some(v) = base.data().iter().find(|v| !(v.is_finite() && **v >= T::zero())) {
        return Err(Error::Domain(format!("input sample {v} must be finite and >= 0")));
    }
    let k = params.k.as_f64();
    let en = params.enabled;
    let read = TukeyLambda::new(params.lambda.as_f64(), params.sigma_tl.as_f64())?;
    let sigma_r = params.sigma_r.as_f64();
    let half_q = 0.5 * params.q.as_f64();
    let hi = base.meta.range_max() as f64;

    let shot_s = rng.substream(tags::SHOT);
    let read_s = rng.substream(tags::READ);
    let row_s = rng.substream(tags::ROW);
    let quant_s = rng.substream(tags::QUANT);

    let width = base.width();
    let mut out = vec![T::zero(); base.len()];
    out.par_chunks_mut(width)
        .zip(base.data().par_chunks(width))
        .enumerate()
        .for_each(|(y, (dst, src))| {
            let y = y as u64;
            let mut shot_rng = en.shot.then(|| shot_s.substream(y).rng());
            let mut read_rng = (en.read && read.sigma > 0.0).then(|| read_s.substream(y).rng());
            let mut quant_rng = (en.quant && half_q > 0.0).then(|| quant_s.substream(y).rng());
            let offset = if en.row && sigma_r > 0.0 {
                let z: f64 = StandardNormal.sample(&mut row_s.substream(y).rng());
                sigma_r * z
            } else {
                0.0
            };
            for (d, s) in dst.iter_mut().zip(src) {
                let s = s.as_f64();
                let mut v = match (units, shot_rng.as_mut()) {
                    (Units::Electrons, Some(r)) => k * poisson_draw(s, r) as f64,
                    (Units::Electrons, None) => k * s,
                    (Units::Dn, Some(r)) => k * poisson_draw(s / k, r) as f64,
                    (Units::Dn, None) => s,
                };
                if let Some(r) = read_rng.as_mut() {
                    v += read.sample(r);
                }
                v += offset;
                if let Some(r) = quant_rng.as_mut() {
                    v += uniform_draw(half_q, r);
                }
                if clip {
                    v = v.clamp(0.0, hi);
                }
                *d = T::of(v);
            }
        });
    base.with_data(out)
}

/// Noisy DN frame from a frame of expected photoelectron counts.
///
/// `D = K·Poisson(I) + TL(λ, σ_TL) + row offset + U(-q/2, q/2)`, with one
/// Gaussian offset shared by all pixels of a row. Disabled components
/// contribute nothing (shot disabled leaves `K·I`).
pub fn synthesize_noise<T: Real>(
    clean_electrons: &RawFrame<T>,
    params: &NoiseParams<T>,
    rng: &RngStream,
    clip: bool,
) -> Result<RawFrame<T>> {
    apply_noise(clean_electrons, Units::Electrons, params, rng, clip)
}

fn check_factor(f: f64) -> Result<()> {
    if f >= 1.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("low-light factor {f} must be >= 1")))
    }
}

/// Divide every sample by the low-light factor `f`.
pub fn darken<T: Real>(clean: &RawFrame<T>, f: f64) -> Result<RawFrame<T>> {
    check_factor(f)?;
    let f = T::of(f);
    Ok(clean.map(|v| v / f))
}

/// Multiply every sample by `f`, optionally clamping to the valid range.
pub fn restore<T: Real>(noisy: &RawFrame<T>, f: f64, clip: bool) -> Result<RawFrame<T>> {
    check_factor(f)?;
    let fv = T::of(f);
    let mut out = noisy.map(|v| v * fv);
    if clip {
        out.clamp_to_range();
    }
    Ok(out)
}

/// A synthesized training pair with the provenance of its draw.
#[derive(Debug, Clone)]
pub struct SynthesizedPair<T> {
    pub noisy: RawFrame<T>,
    pub clean: RawFrame<T>,
    pub params: NoiseParams<T>,
    pub factor: f64,
}

/// Darken a clean DN frame by a random factor, add model noise, restore.
pub fn synthesize_pair<T: Real>(
    clean: &RawFrame<T>,
    model: &JointParamModel,
    config: &SynthesisConfig,
    rng: &RngStream,
) -> Result<SynthesizedPair<T>> {
    config.validate()?;
    let hi = T::of(clean.meta.range_max() as f64);
    if let Some(v) = clean.data().iter().find(|v| !(**v >= T::zero() && **v <= hi)) {
        return Err(Error::Domain(format!("clean sample {v} outside [0, {hi}]")));
    }
    let factor = if config.f_min == config.f_max {
        config.f_min
    } else {
        let u: f64 = rng.substream(tags::FACTOR).rng().random();
        config.f_min + u * (config.f_max - config.f_min)
    };
    let mut params: NoiseParams<T> = sample_noise_params(model, &rng.substream(tags::PARAMS))?;
    params.q = T::of(config.quant_step);
    params.enabled = config.components;

    let dark = darken(clean, factor)?;
    let noisy = apply_noise(&dark, Units::Dn, &params, &rng.substream(tags::NOISE), config.clip)?;
    let mut noisy = restore(&noisy, factor, config.clip)?;
    if config.quantize_output {
        for v in noisy.data_mut() {
            *v = v.round();
        }
    }
    Ok(SynthesizedPair {
        noisy,
        clean: clean.clone(),
        params,
        factor,
    })
}
