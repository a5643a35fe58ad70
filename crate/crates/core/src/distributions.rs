//! Sampling primitives for every distribution in the noise model.
//!
//! All vector samplers consume a fresh generator built from the supplied
//! [`RngStream`], so the same stream always yields the same draws.

use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;

/// Quantile function of the standard (zero location, unit scale) Tukey lambda
/// distribution, without domain checks.
///
/// `(p^λ - (1-p)^λ) / λ` for `λ != 0` and the logistic quantile `ln(p/(1-p))`
/// at `λ = 0`. The `exp_m1` form keeps it accurate as `λ -> 0`.
#[inline]
pub fn tl_quantile(p: f64, lambda: f64) -> f64 {
    let lp = p.ln();
    let lq = (-p).ln_1p();
    if lambda == 0.0 {
        lp - lq
    } else {
        ((lambda * lp).exp_m1() - (lambda * lq).exp_m1()) / lambda
    }
}

/// Tukey lambda quantile `Q(p; λ)` with a domain check on `p`.
pub fn tukey_lambda_quantile<T: Real>(p: T, lambda: T) -> Result<T> {
    let (p, lambda) = (p.as_f64(), lambda.as_f64());
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability {p} outside (0, 1)")));
    }
    if !lambda.is_finite() {
        return Err(Error::Domain(format!("non-finite shape {lambda}")));
    }
    Ok(T::of(tl_quantile(p, lambda)))
}

/// Variance of the standard Tukey lambda distribution.
///
/// Infinite for `λ <= -1/2`; `π²/3` (logistic) at `λ = 0`.
pub fn tukey_lambda_variance(lambda: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    if lambda <= -0.5 {
        return f64::INFINITY;
    }
    // the closed form cancels catastrophically near zero; interpolate there
    const NEAR_ZERO: f64 = 1e-3;
    if lambda.abs() < NEAR_ZERO {
        let at0 = std::f64::consts::PI.powi(2) / 3.0;
        let edge = tukey_lambda_variance(NEAR_ZERO.copysign(lambda));
        return at0 + (edge - at0) * lambda.abs() / NEAR_ZERO;
    }
    let beta_term = (2.0 * ln_gamma(lambda + 1.0) - ln_gamma(2.0 * lambda + 2.0)).exp();
    2.0 / (lambda * lambda) * (1.0 / (1.0 + 2.0 * lambda) - beta_term)
}

/// Zero-location Tukey lambda distribution with scale `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TukeyLambda {
    pub lambda: f64,
    pub sigma: f64,
}

impl TukeyLambda {
    pub fn new(lambda: f64, sigma: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::Domain(format!("non-finite shape {lambda}")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("scale {sigma} must be finite and >= 0")));
        }
        Ok(Self { lambda, sigma })
    }
}

impl Distribution<f64> for TukeyLambda {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        if self.sigma == 0.0 {
            0.0
        } else {
            self.sigma * tl_quantile(u, self.lambda)
        }
    }
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} {v} must be finite and >= 0")))
    }
}

/// `n` independent Tukey lambda draws `sigma * Q(U; λ)`, `U ~ Uniform(0, 1)`.
pub fn sample_tukey_lambda<T: Real>(n: usize, lambda: T, sigma: T, rng: &RngStream) -> Result<Vec<T>> {
    let dist = TukeyLambda::new(lambda.as_f64(), sigma.as_f64())?;
    if dist.sigma == 0.0 {
        return Ok(vec![T::zero(); n]);
    }
    let mut r = rng.rng();
    Ok((0..n).map(|_| T::of(dist.sample(&mut r))).collect())
}

/// One Poisson draw from an already-running generator.
///
/// Means below 12 use inversion by multiplication, larger means the
/// exact rejection sampler of `rand_distr`; neither is an approximation.
#[inline]
pub fn poisson_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    match rand_distr::Poisson::new(mean) {
        Ok(d) => d.sample(rng) as u64,
        // only reachable for means beyond ~1.8e19 electrons
        Err(_) => mean.round() as u64,
    }
}

fn check_mean(mean: f64) -> Result<()> {
    if mean >= 0.0 && mean.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("Poisson mean {mean} must be finite and >= 0")))
    }
}

/// A single exact Poisson draw with the given mean.
pub fn sample_poisson(mean: f64, rng: &RngStream) -> Result<u64> {
    check_mean(mean)?;
    Ok(poisson_draw(mean, &mut rng.rng()))
}

/// `n` independent Poisson draws sharing one stream.
pub fn sample_poisson_n(n: usize, mean: f64, rng: &RngStream) -> Result<Vec<u64>> {
    check_mean(mean)?;
    let mut r = rng.rng();
    Ok((0..n).map(|_| poisson_draw(mean, &mut r)).collect())
}

/// `n` zero-mean Gaussian draws with standard deviation `sigma`.
pub fn sample_gaussian<T: Real>(n: usize, sigma: T, rng: &RngStream) -> Result<Vec<T>> {
    let sigma = sigma.as_f64();
    check_scale("sigma", sigma)?;
    if sigma == 0.0 {
        return Ok(vec![T::zero(); n]);
    }
    let mut r = rng.rng();
    Ok((0..n)
        .map(|_| {
            let z: f64 = r.sample(StandardNormal);
            T::of(sigma * z)
        })
        .collect())
}

/// One draw uniform on `[-half_width, half_width]`.
#[inline]
pub fn uniform_draw<R: Rng + ?Sized>(half_width: f64, rng: &mut R) -> f64 {
    if half_width == 0.0 {
        return 0.0;
    }
    let u: f64 = rng.random();
    half_width * (2.0 * u - 1.0)
}

/// `n` draws uniform on `[-half_width, half_width]`.
pub fn sample_uniform<T: Real>(n: usize, half_width: T, rng: &RngStream) -> Result<Vec<T>> {
    let h = half_width.as_f64();
    check_scale("half_width", h)?;
    if h == 0.0 {
        return Ok(vec![T::zero(); n]);
    }
    let mut r = rng.rng();
    Ok((0..n).map(|_| T::of(uniform_draw(h, &mut r))).collect())
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(p)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().cdf(x)
}
