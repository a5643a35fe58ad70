use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which of the four additive noise components are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseComponents {
    pub shot: bool,
    pub read: bool,
    pub row: bool,
    pub quant: bool,
}

impl Default for NoiseComponents {
    fn default() -> Self {
        Self::ALL
    }
}

impl NoiseComponents {
    pub const ALL: Self = Self {
        shot: true,
        read: true,
        row: true,
        quant: true,
    };
    pub const NONE: Self = Self {
        shot: false,
        read: false,
        row: false,
        quant: false,
    };

    /// Set a component by name (`shot`, `read`, `row`, `quant`).
    pub fn set(&mut self, name: &str, on: bool) -> Result<()> {
        match name.trim() {
            "shot" => self.shot = on,
            "read" => self.read = on,
            "row" => self.row = on,
            "quant" => self.quant = on,
            other => return Err(Error::Config(format!("unknown noise component {other:?}"))),
        }
        Ok(())
    }

    /// All components except those named in a comma separated list.
    pub fn all_except(list: &str) -> Result<Self> {
        let mut c = Self::ALL;
        for name in list.split(',').filter(|s| !s.trim().is_empty()) {
            c.set(name, false)?;
        }
        Ok(c)
    }

    pub fn only(name: &str) -> Result<Self> {
        let mut c = Self::NONE;
        c.set(name, true)?;
        Ok(c)
    }
}

/// One concrete draw of the noise model parameters.
///
/// `k` is in DN per electron; `sigma_tl`, `sigma_r` and `q` are in output DN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams<T> {
    pub k: T,
    pub lambda: T,
    pub sigma_tl: T,
    pub sigma_r: T,
    pub q: T,
    #[serde(default)]
    pub enabled: NoiseComponents,
}

impl<T: Real> NoiseParams<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: T| v.is_finite() && v >= T::zero();
        if !(self.k.is_finite() && self.k > T::zero()) {
            return Err(Error::Domain(format!("gain K = {} must be > 0", self.k)));
        }
        if !(self.lambda.is_finite() && self.lambda.abs() <= T::one()) {
            return Err(Error::Domain(format!("shape λ = {} outside [-1, 1]", self.lambda)));
        }
        for (name, v) in [("sigma_tl", self.sigma_tl), ("sigma_r", self.sigma_r), ("q", self.q)] {
            if !ok(v) {
                return Err(Error::Domain(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> NoiseParams<U> {
        NoiseParams {
            k: U::of(self.k.as_f64()),
            lambda: U::of(self.lambda.as_f64()),
            sigma_tl: U::of(self.sigma_tl.as_f64()),
            sigma_r: U::of(self.sigma_r.as_f64()),
            q: U::of(self.q.as_f64()),
            enabled: self.enabled,
        }
    }
}
