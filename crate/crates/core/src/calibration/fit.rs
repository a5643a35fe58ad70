//! Least-squares line fitting and the joint parameter model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthesis::{FitLine, JointParamModel};

/// Ordinary least squares `y = a·x + b`; `resid_std` is `sqrt(RSS / (n - 2))`
/// (zero when `n == 2`).
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<FitLine> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Shape(format!("{} x values vs {} y values", n, y.len())));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("line fit needs >= 2 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx <= 0.0 {
        return Err(Error::Degenerate("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let resid_std = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(xi, yi)| (yi - slope * xi - intercept).powi(2))
            .sum();
        (rss / (nf - 2.0)).sqrt()
    } else {
        0.0
    };
    Ok(FitLine {
        slope,
        intercept,
        resid_std,
        n_points: n,
    })
}

/// Calibrated parameters of a single ISO setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoParams {
    pub k: f64,
    pub lambda: f64,
    pub sigma_tl: f64,
    pub sigma_r: f64,
}

fn log_columns(per_iso: &BTreeMap<u32, IsoParams>) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut lk = Vec::new();
    let mut ltl = Vec::new();
    let mut lr = Vec::new();
    for (iso, p) in per_iso {
        if !(p.k > 0.0 && p.sigma_tl > 0.0 && p.sigma_r > 0.0) {
            return Err(Error::CalibrationFailure(format!(
                "ISO {iso}: K, σ_TL and σ_r must be positive to fit in log space ({p:?})"
            )));
        }
        lk.push(p.k.ln());
        ltl.push(p.sigma_tl.ln());
        lr.push(p.sigma_r.ln());
    }
    Ok((lk, ltl, lr))
}

fn pool_and_bounds(per_iso: &BTreeMap<u32, IsoParams>, lk: &[f64]) -> (f64, f64, Vec<f64>) {
    let lo = lk.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lk.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi, per_iso.values().map(|p| p.lambda).collect())
}

/// Regress log σ_TL and log σ_r on log K across ISO settings.
pub fn fit_joint_model(per_iso: &BTreeMap<u32, IsoParams>) -> Result<JointParamModel> {
    if per_iso.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "joint model needs >= 3 ISO settings, got {}",
            per_iso.len()
        )));
    }
    let (lk, ltl, lr) = log_columns(per_iso)?;
    let tl_line = fit_line(&lk, &ltl)?;
    let row_line = fit_line(&lk, &lr)?;
    let (log_k_min, log_k_max, lambda_pool) = pool_and_bounds(per_iso, &lk);
    let model = JointParamModel {
        log_k_min,
        log_k_max,
        tl_line,
        row_line,
        lambda_pool,
    };
    model.validate()?;
    Ok(model)
}

/// Residual-free model for one or two ISO settings.
///
/// One ISO reproduces its parameters exactly; two ISOs are joined by the line
/// through both points.
pub fn exact_joint_model(per_iso: &BTreeMap<u32, IsoParams>) -> Result<JointParamModel> {
    let (lk, ltl, lr) = log_columns(per_iso)?;
    let line = |y: &[f64]| -> Result<FitLine> {
        match lk.len() {
            0 => Err(Error::InsufficientData("no ISO settings".into())),
            1 => Ok(FitLine {
                slope: 0.0,
                intercept: y[0],
                resid_std: 0.0,
                n_points: 1,
            }),
            2 if lk[0] == lk[1] => Ok(FitLine {
                slope: 0.0,
                intercept: 0.5 * (y[0] + y[1]),
                resid_std: 0.0,
                n_points: 2,
            }),
            _ => fit_line(&lk, y),
        }
    };
    let tl_line = line(&ltl)?;
    let row_line = line(&lr)?;
    let (log_k_min, log_k_max, lambda_pool) = pool_and_bounds(per_iso, &lk);
    Ok(JointParamModel {
        log_k_min,
        log_k_max,
        tl_line,
        row_line,
        lambda_pool,
    })
}
