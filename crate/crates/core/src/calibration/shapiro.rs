//! Shapiro-Wilk normality test (Royston's AS R94 approximation, 3 <= n <= 5000).

use rand::seq::index;

use crate::distributions::{normal_cdf, normal_quantile};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;

/// Largest sample size covered by the coefficient approximation.
pub const SHAPIRO_MAX_N: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p_value: f64,
    /// Number of samples the statistic was computed on.
    pub n: usize,
}

impl ShapiroWilk {
    /// Normality cannot be rejected when the p-value is higher than `alpha`.
    pub fn is_normal(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

/// Coefficients `a_1 .. a_{n/2}` for the upper half of the order statistics.
fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    let an = n as f64;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let an25 = an + 0.25;
    let mut m: Vec<f64> = (1..=half).map(|i| normal_quantile((i as f64 - 0.375) / an25)).collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let (start, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        m[1] = a2;
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    m[0] = a1;
    for v in m.iter_mut().skip(start) {
        *v = -*v / fac;
    }
    m
}

fn p_value(w: f64, n: usize) -> f64 {
    let an = n as f64;
    if n == 3 {
        let stqr = (0.75f64).sqrt().asin();
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - stqr);
        return p.clamp(0.0, 1.0);
    }
    let w1 = (1.0 - w).ln();
    let (y, m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if w1 >= gamma {
            return 1e-99;
        }
        (-(gamma - w1).ln(), poly(&C3, an), poly(&C4, an).exp())
    } else {
        let xx = an.ln();
        (w1, poly(&C5, xx), poly(&C6, xx).exp())
    };
    (1.0 - normal_cdf((y - m) / s)).clamp(0.0, 1.0)
}

fn shapiro_sorted(x: &[f64]) -> Result<ShapiroWilk> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let ssq: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if ssq <= 0.0 || x[n - 1] - x[0] <= 0.0 {
        return Err(Error::Degenerate("Shapiro-Wilk on constant data".into()));
    }
    let a = coefficients(n);
    let num: f64 = a
        .iter()
        .enumerate()
        .map(|(i, ai)| ai * (x[n - 1 - i] - x[i]))
        .sum();
    let mut w = (num * num / ssq).min(1.0);
    if n == 3 {
        w = w.max(0.75);
    }
    Ok(ShapiroWilk {
        w,
        p_value: p_value(w, n),
        n,
    })
}

/// Shapiro-Wilk W and p-value.
///
/// Inputs longer than `max_n` (capped at 5000) are randomly subsampled
/// without replacement using `rng`, so the result is reproducible.
pub fn shapiro_wilk<T: Real>(samples: &[T], max_n: usize, rng: &RngStream) -> Result<ShapiroWilk> {
    let max_n = max_n.clamp(3, SHAPIRO_MAX_N);
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "Shapiro-Wilk needs >= 3 samples, got {}",
            samples.len()
        )));
    }
    let mut x: Vec<f64> = if samples.len() > max_n {
        index::sample(&mut rng.rng(), samples.len(), max_n)
            .into_iter()
            .map(|i| samples[i].as_f64())
            .collect()
    } else {
        samples.iter().map(|v| v.as_f64()).collect()
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite sample".into()));
    }
    x.sort_by(f64::total_cmp);
    shapiro_sorted(&x)
}
