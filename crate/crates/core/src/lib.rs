//! Physics-based raw sensor noise for extreme low-light imaging.
//!
//! The noise model adds, in DN, photon shot noise scaled by the system gain,
//! Tukey lambda read noise, a Gaussian per-row offset and uniform
//! quantization noise. [`synthesis`] draws parameters from a fitted joint
//! model and turns clean raw frames into noisy/clean training pairs;
//! [`calibration`] estimates the parameters of a real camera from flat-field
//! and bias frames.
//!
//! Frames, samplers and metrics are generic over the [`Real`] scalar
//! (`f32`/`f64`); calibration statistics always accumulate in `f64`.

pub mod calibration;
pub mod distributions;
pub mod error;
pub mod frame;
pub mod io;
pub mod metrics;
pub mod params;
pub mod preview;
pub mod rng;
pub mod scalar;
pub mod synthesis;

pub use calibration::{calibrate_iso, CalibrationOptions, CalibrationReport, CameraProfile, FrameSet, IsoParams};
pub use distributions::{
    sample_gaussian, sample_poisson, sample_tukey_lambda, sample_uniform, tukey_lambda_quantile,
    tukey_lambda_variance,
};
pub use error::{Error, Result};
pub use frame::{pack_bayer, unpack_bayer, BayerPattern, BayerPlanes, FrameKind, FrameMeta, RawFrame};
pub use metrics::{brightness_align, psnr, ssim, EvalResult};
pub use params::{NoiseComponents, NoiseParams};
pub use rng::RngStream;
pub use scalar::Real;
pub use synthesis::{
    darken, restore, sample_noise_params, synthesize_noise, synthesize_pair, FitLine, JointParamModel,
    SynthesisConfig, SynthesizedPair,
};

/// Double-precision frame.
pub type Frame = RawFrame<f64>;
/// Single-precision frame.
pub type Frame32 = RawFrame<f32>;
pub type Params = NoiseParams<f64>;
pub type Params32 = NoiseParams<f32>;
pub type Pair = SynthesizedPair<f64>;
pub type Pair32 = SynthesizedPair<f32>;
