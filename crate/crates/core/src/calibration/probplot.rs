//! Probability plots and the Tukey lambda PPCC shape search.

use rayon::prelude::*;

use crate::distributions::tl_quantile;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Filliben's uniform order-statistic medians for a sample of size `n`.
pub fn filliben_positions(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut m: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.3175) / (nf + 0.365)).collect();
    if n > 0 {
        let last = 0.5f64.powf(1.0 / nf);
        m[n - 1] = last;
        m[0] = 1.0 - last;
    }
    m
}

/// Least-squares line of the order statistics against theoretical quantiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbPlotFit {
    /// Slope of the line: the scale estimate.
    pub scale: f64,
    /// Intercept of the line: the location estimate.
    pub offset: f64,
    pub r2: f64,
    /// Correlation of the plot (signed square root of `r2`).
    pub correlation: f64,
}

fn sorted_f64<T: Real>(samples: &[T]) -> Result<Vec<f64>> {
    let mut x: Vec<f64> = samples.iter().map(|v| v.as_f64()).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite sample".into()));
    }
    x.par_sort_unstable_by(f64::total_cmp);
    Ok(x)
}

/// Probability plot fit on data that is already sorted ascending.
pub fn probability_plot_sorted(sorted: &[f64], quantile: impl Fn(f64) -> f64 + Sync) -> Result<ProbPlotFit> {
    let n = sorted.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("probability plot needs >= 3 samples, got {n}")));
    }
    if sorted[n - 1] - sorted[0] <= 0.0 {
        return Err(Error::Degenerate("probability plot of zero-variance data".into()));
    }
    let q: Vec<f64> = filliben_positions(n).into_par_iter().map(&quantile).collect();
    let nf = n as f64;
    let mq = q.iter().sum::<f64>() / nf;
    let mx = sorted.iter().sum::<f64>() / nf;
    let (mut sqq, mut sxx, mut sqx) = (0.0, 0.0, 0.0);
    for (qi, xi) in q.iter().zip(sorted) {
        let (dq, dx) = (qi - mq, xi - mx);
        sqq += dq * dq;
        sxx += dx * dx;
        sqx += dq * dx;
    }
    if sqq <= 0.0 || sxx <= 0.0 {
        return Err(Error::Degenerate("probability plot with no spread".into()));
    }
    let scale = sqx / sqq;
    let correlation = (sqx / (sqq * sxx).sqrt()).clamp(-1.0, 1.0);
    Ok(ProbPlotFit {
        scale,
        offset: mx - scale * mq,
        r2: correlation * correlation,
        correlation,
    })
}

/// Sort `samples`, pair them with `quantile` at Filliben positions and fit a line.
pub fn probability_plot<T: Real>(samples: &[T], quantile: impl Fn(f64) -> f64 + Sync) -> Result<ProbPlotFit> {
    probability_plot_sorted(&sorted_f64(samples)?, quantile)
}

/// Up to `max_points` evenly spaced (theoretical quantile, order statistic)
/// pairs of a probability plot, for plotting.
pub fn probability_plot_points(sorted: &[f64], quantile: impl Fn(f64) -> f64, max_points: usize) -> Vec<(f64, f64)> {
    let n = sorted.len();
    if n == 0 || max_points == 0 {
        return Vec::new();
    }
    let m = filliben_positions(n);
    let k = max_points.min(n);
    (0..k)
        .map(|j| {
            let i = if k == 1 { 0 } else { j * (n - 1) / (k - 1) };
            (quantile(m[i]), sorted[i])
        })
        .collect()
}

/// Shape the PPCC search prefers among equally good candidates.
pub const GAUSSIAN_LIKE_LAMBDA: f64 = 0.14;

/// `-1.00, -0.99, ..., 1.00`.
pub fn default_lambda_grid() -> Vec<f64> {
    (-100..=100).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpccFit {
    pub lambda: f64,
    pub correlation: f64,
    pub curve: Vec<(f64, f64)>,
}

/// Tukey lambda PPCC curve over `grid` and its maximiser.
///
/// Filliben positions are symmetric and the Tukey lambda quantile is odd, so
/// only the upper half of the plot is evaluated.
pub fn ppcc_fit<T: Real>(samples: &[T], grid: &[f64]) -> Result<PpccFit> {
    if samples.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "PPCC needs >= 10 samples, got {}",
            samples.len()
        )));
    }
    if grid.is_empty() {
        return Err(Error::Config("empty λ grid".into()));
    }
    let x = sorted_f64(samples)?;
    let n = x.len();
    let half = n / 2;
    let mean = x.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Degenerate("PPCC of zero-variance data".into()));
    }
    // upper-half positions and the matching spreads x_(n-1-i) - x_(i)
    let pos = filliben_positions(n);
    let upper: Vec<(f64, f64, f64)> = (0..half)
        .map(|i| {
            let p = pos[n - 1 - i];
            (p.ln(), (-p).ln_1p(), x[n - 1 - i] - x[i])
        })
        .collect();

    let curve: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&lambda| {
            let (mut sqx, mut sqq) = (0.0, 0.0);
            for &(lp, lq, d) in &upper {
                let q = if lambda == 0.0 {
                    lp - lq
                } else {
                    ((lambda * lp).exp_m1() - (lambda * lq).exp_m1()) / lambda
                };
                sqx += q * d;
                sqq += q * q;
            }
            let r = if sqq > 0.0 {
                (sqx / (2.0 * sqq * sxx).sqrt()).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            (lambda, r)
        })
        .collect();

    let best = curve.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * best.abs().max(1e-300);
    let (lambda, correlation) = curve
        .iter()
        .filter(|c| best - c.1 <= tol)
        .min_by(|a, b| {
            (a.0 - GAUSSIAN_LIKE_LAMBDA)
                .abs()
                .total_cmp(&(b.0 - GAUSSIAN_LIKE_LAMBDA).abs())
        })
        .copied()
        .expect("grid is non-empty");
    Ok(PpccFit {
        lambda,
        correlation,
        curve,
    })
}

/// Quantile function of the Tukey lambda member with shape `lambda`.
pub fn tukey_quantile_fn(lambda: f64) -> impl Fn(f64) -> f64 + Sync + Copy {
    move |p| tl_quantile(p, lambda)
}

/// Fraction of plotting positions left out at each end by [`fit_tukey_lambda`].
///
/// For λ < -0.25 the extreme order statistics have no finite variance and a
/// handful of them would decide both the shape and the scale.
pub const DEFAULT_TRIM: f64 = 0.02;

/// `ln(p)` and `ln(1 - p)` for `p = 1 / (1 + e^-z)`.
fn log_logistic(z: f64) -> (f64, f64) {
    let softplus = |v: f64| if v > 0.0 { v + (-v).exp().ln_1p() } else { v.exp().ln_1p() };
    (-softplus(-z), -softplus(z))
}

/// Quantiles of `sigma·TL(λ) + U(-q/2, q/2)`, the read noise as seen after
/// rounding to a grid of step `q`.
///
/// The CDF is `G(x) = (σ/q) [H((x + q/2)/σ) - H((x - q/2)/σ)]` where `H` is
/// the antiderivative of the unit Tukey lambda CDF, which in terms of
/// `p = F(u)` is `p·u - ∫Q(p) dp`. `F` is read off a dense table of `Q`.
pub struct QuantizedTukey {
    lambda: f64,
    /// Unit-scale table: logit, quantile.
    z: Vec<f64>,
    u: Vec<f64>,
    /// Lower half of `G`: nodes `x` (ascending, up to 0) and `G(x)`.
    gx: Vec<f64>,
    gp: Vec<f64>,
}

const TABLE_Z: f64 = 40.0;
const TABLE_STEPS: usize = 8192;

impl QuantizedTukey {
    pub fn new(lambda: f64, sigma: f64, q: f64) -> Result<Self> {
        if !(sigma > 0.0 && q > 0.0 && sigma.is_finite() && q.is_finite()) {
            return Err(Error::Domain(format!("need sigma > 0 and q > 0, got {sigma}, {q}")));
        }
        let dz = 2.0 * TABLE_Z / TABLE_STEPS as f64;
        let half = TABLE_STEPS / 2;
        let z: Vec<f64> = (0..=TABLE_STEPS).map(|j| -TABLE_Z + j as f64 * dz).collect();
        let mut u = vec![0.0; TABLE_STEPS + 1];
        for j in 0..half {
            let p = 1.0 / (1.0 + (-z[j]).exp());
            u[j] = tl_quantile(p, lambda);
            u[TABLE_STEPS - j] = -u[j];
        }
        let mut me = Self {
            lambda,
            z,
            u,
            gx: Vec::with_capacity(half + 1),
            gp: Vec::with_capacity(half + 1),
        };
        for j in 0..=half {
            // push tail nodes out by up to q/2 so the table spans the widened support
            let w = 1.0 - j as f64 / half as f64;
            let x = sigma * me.u[j] - 0.5 * q * w;
            let g = if j == half {
                0.5
            } else {
                sigma / q * (me.h((x + 0.5 * q) / sigma) - me.h((x - 0.5 * q) / sigma))
            };
            if me.gp.last().is_none_or(|&last| g > last) && me.gx.last().is_none_or(|&last| x > last) {
                me.gx.push(x);
                me.gp.push(g);
            }
        }
        Ok(me)
    }

    /// Logit of the unit CDF at `u`.
    fn logit_cdf(&self, u: f64) -> f64 {
        let n = self.u.len();
        if u <= self.u[0] {
            return self.z[0];
        }
        if u >= self.u[n - 1] {
            return self.z[n - 1];
        }
        let j = self.u.partition_point(|&v| v <= u) - 1;
        let (u0, u1) = (self.u[j], self.u[j + 1]);
        if u1 > u0 {
            self.z[j] + (u - u0) / (u1 - u0) * (self.z[j + 1] - self.z[j])
        } else {
            self.z[j]
        }
    }

    /// Antiderivative of the unit CDF, up to a constant.
    fn h(&self, u: f64) -> f64 {
        let (lp, lq) = log_logistic(self.logit_cdf(u));
        let p = lp.exp();
        let l = self.lambda;
        let integral_q = if l == 0.0 {
            p * lp + (1.0 - p) * lq
        } else if l == -1.0 {
            -lp - lq
        } else {
            // (p^(l+1) + (1-p)^(l+1) - 1) / (l (l+1)), without the constant
            (((l + 1.0) * lp).exp() + ((l + 1.0) * lq).exp_m1()) / (l * (l + 1.0))
        };
        p * u - integral_q
    }

    /// Lower-half inverse CDF; `p <= 0.5`.
    fn lower(&self, p: f64) -> f64 {
        let (gx, gp) = (&self.gx, &self.gp);
        if p <= gp[0] {
            return gx[0];
        }
        let j = gp.partition_point(|&v| v <= p).min(gp.len() - 1);
        let (p0, p1) = (gp[j - 1], gp[j]);
        gx[j - 1] + (p - p0) / (p1 - p0) * (gx[j] - gx[j - 1])
    }

    /// Lower-half quantiles of ascending `ps` (each `<= 0.5`) into `out`.
    fn lower_sweep(&self, ps: impl Iterator<Item = f64>, out: &mut [f64]) {
        let (gx, gp) = (&self.gx, &self.gp);
        let mut j = 1;
        for (o, p) in out.iter_mut().zip(ps) {
            if p <= gp[0] {
                *o = gx[0];
                continue;
            }
            while j < gp.len() - 1 && gp[j] <= p {
                j += 1;
            }
            let (p0, p1) = (gp[j - 1], gp[j]);
            *o = gx[j - 1] + ((p - p0) / (p1 - p0)).min(1.0) * (gx[j] - gx[j - 1]);
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.5 {
            self.lower(p)
        } else {
            -self.lower(1.0 - p)
        }
    }
}

/// Shape and scale of Tukey lambda read noise from sorted residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct TukeyFit {
    pub lambda: f64,
    pub sigma: f64,
    /// Correlation of the trimmed probability plot at `lambda`.
    pub correlation: f64,
    /// Plain Tukey lambda PPCC of the trimmed plot over the whole grid.
    pub curve: Vec<(f64, f64)>,
}

/// Half-width of the λ window searched with the rounding-aware quantiles.
pub const ROUNDING_WINDOW: f64 = 0.15;

/// Trimmed, centered sample: the upper-half spreads `x_(n-1-i) - x_(i)`
/// paired with their (upper) plotting positions.
struct HalfPlot {
    p_upper: Vec<f64>,
    spread: Vec<f64>,
    /// Sum of squared deviations of the trimmed sample.
    sxx: f64,
}

impl HalfPlot {
    /// Correlation and slope against an odd quantile function given at the
    /// upper positions.
    fn corr_slope(&self, q_upper: &[f64]) -> (f64, f64) {
        let (mut sqx, mut sqq) = (0.0, 0.0);
        for (q, d) in q_upper.iter().zip(&self.spread) {
            sqx += q * d;
            sqq += q * q;
        }
        // the full sums are twice the half sums; the quantile mean is zero
        if sqq <= 0.0 {
            return (0.0, 0.0);
        }
        let r = (sqx / (2.0 * sqq * self.sxx).sqrt()).clamp(-1.0, 1.0);
        (r, sqx / (2.0 * sqq))
    }
}

fn tie_break(a: &(f64, f64, f64), b: &(f64, f64, f64)) -> std::cmp::Ordering {
    (a.0 - GAUSSIAN_LIKE_LAMBDA)
        .abs()
        .total_cmp(&(b.0 - GAUSSIAN_LIKE_LAMBDA).abs())
}

/// Best `(λ, r, σ)` by correlation, ties toward [`GAUSSIAN_LIKE_LAMBDA`].
fn best_of(fits: &[(f64, f64, f64)]) -> (f64, f64, f64) {
    let best = fits.iter().map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * best.abs().max(1e-300);
    *fits
        .iter()
        .filter(|f| best - f.1 <= tol)
        .min_by(|a, b| tie_break(a, b))
        .expect("non-empty")
}

/// PPCC shape search and probability plot scale over the central
/// `[trim, 1 - trim]` positions.
///
/// With `q = 0` this is the plain Tukey lambda fit. With a rounding step
/// `q > 0` the grid values within [`ROUNDING_WINDOW`] of the plain optimum
/// are re-scored against `σ·TL(λ) + U(-q/2, q/2)`, where for each λ the scale
/// is the fixed point at which the plot slope is 1.
pub fn fit_tukey_lambda(sorted: &[f64], grid: &[f64], trim: f64, q: f64) -> Result<TukeyFit> {
    let n = sorted.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!("shape fit needs >= 10 samples, got {n}")));
    }
    if grid.is_empty() {
        return Err(Error::Config("empty λ grid".into()));
    }
    if !(0.0..0.5).contains(&trim) || !(q >= 0.0 && q.is_finite()) {
        return Err(Error::Config(format!("invalid trim {trim} or step {q}")));
    }
    let pos = filliben_positions(n);
    // positions are symmetric, so the kept range is too
    let lo = pos.partition_point(|&p| p < trim);
    let kept = n - 2 * lo;
    if kept < 10 {
        return Err(Error::InsufficientData(format!("trim {trim} leaves fewer than 10 samples")));
    }
    let x = &sorted[lo..n - lo];
    let mean = x.iter().sum::<f64>() / kept as f64;
    let sxx: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Degenerate("shape fit of zero-variance data".into()));
    }
    let half = kept / 2;
    let plot = HalfPlot {
        p_upper: (0..half).map(|i| pos[n - 1 - lo - i]).collect(),
        spread: (0..half).map(|i| x[kept - 1 - i] - x[i]).collect(),
        sxx,
    };

    let plain: Vec<(f64, f64, f64)> = grid
        .par_iter()
        .map(|&lambda| {
            let qs: Vec<f64> = plot.p_upper.iter().map(|&p| tl_quantile(p, lambda)).collect();
            let (r, slope) = plot.corr_slope(&qs);
            (lambda, r, slope)
        })
        .collect();
    let curve = plain.iter().map(|f| (f.0, f.1)).collect();
    let mut best = best_of(&plain);

    if q > 0.0 {
        let center = best.0;
        let refined: Vec<(f64, f64, f64)> = plain
            .par_iter()
            .filter(|f| (f.0 - center).abs() <= ROUNDING_WINDOW + 1e-9 && f.2 > 0.0)
            .map(|&(lambda, r0, sigma0)| rounded_fit(&plot, lambda, sigma0, q).unwrap_or((lambda, r0, sigma0)))
            .collect();
        if !refined.is_empty() {
            best = best_of(&refined);
        }
    }
    Ok(TukeyFit {
        lambda: best.0,
        sigma: best.2,
        correlation: best.1,
        curve,
    })
}

/// Fixed-point scale and correlation against the rounded distribution.
fn rounded_fit(plot: &HalfPlot, lambda: f64, mut sigma: f64, q: f64) -> Option<(f64, f64, f64)> {
    let mut r = 0.0;
    let mut qs = vec![0.0; plot.p_upper.len()];
    for _ in 0..30 {
        let dist = QuantizedTukey::new(lambda, sigma, q).ok()?;
        // upper positions descend, so 1 - p ascends through the lower half
        dist.lower_sweep(plot.p_upper.iter().map(|p| 1.0 - p), &mut qs);
        for v in qs.iter_mut() {
            *v = -*v;
        }
        let (rr, slope) = plot.corr_slope(&qs);
        r = rr;
        if !(slope > 0.0 && slope.is_finite()) {
            return None;
        }
        sigma *= slope;
        if (slope - 1.0).abs() < 1e-7 {
            break;
        }
    }
    Some((lambda, r, sigma))
}
