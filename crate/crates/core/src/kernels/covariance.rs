use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::special::gamma;

use super::check_hurst;

/// Closed-form covariance of a centered Gaussian target process.
pub trait Covariance: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn hurst(&self) -> f64;
    fn cov(&self, t: f64, s: f64) -> f64;

    fn variance(&self, t: f64) -> f64 {
        self.cov(t, t)
    }
}

/// `½(s^H + t^H − |s−t|^H)`.
#[derive(Debug, Clone, Copy)]
pub struct FbmCov(f64);

/// `s^H + t^H − ½[(s+t)^H + |s−t|^H]`.
#[derive(Debug, Clone, Copy)]
pub struct SubFbmCov(f64);

/// Covariance of `X^H = ∫_0^∞ (1−e^{−rt}) r^{−(1+H)/2} dW_r`; `H ≠ 1`.
#[derive(Debug, Clone, Copy)]
pub struct LeiNualartCov {
    h: f64,
    scale: f64,
}

impl FbmCov {
    pub const NAME: &'static str = "fbm";
    pub fn new(h: f64) -> Result<Self> {
        check_hurst(h)?;
        Ok(Self(h))
    }
}

impl SubFbmCov {
    pub const NAME: &'static str = "subfbm";
    pub fn new(h: f64) -> Result<Self> {
        check_hurst(h)?;
        Ok(Self(h))
    }
}

impl LeiNualartCov {
    pub const NAME: &'static str = "lei-nualart";
    pub fn new(h: f64) -> Result<Self> {
        check_hurst(h)?;
        let scale = if h < 1.0 {
            gamma(1.0 - h) / h
        } else if h > 1.0 {
            gamma(2.0 - h) / (h * (h - 1.0))
        } else {
            return Err(Error::UnsupportedParameter(
                "the Lei-Nualart covariance has no H = 1 form".into(),
            ));
        };
        Ok(Self { h, scale })
    }
}

impl Covariance for FbmCov {
    fn name(&self) -> &'static str {
        Self::NAME
    }
    fn hurst(&self) -> f64 {
        self.0
    }
    fn cov(&self, t: f64, s: f64) -> f64 {
        let h = self.0;
        if h == 1.0 {
            return t.min(s);
        }
        0.5 * (s.powf(h) + t.powf(h) - (s - t).abs().powf(h))
    }
}

impl Covariance for SubFbmCov {
    fn name(&self) -> &'static str {
        Self::NAME
    }
    fn hurst(&self) -> f64 {
        self.0
    }
    fn cov(&self, t: f64, s: f64) -> f64 {
        let h = self.0;
        if h == 1.0 {
            return t.min(s);
        }
        s.powf(h) + t.powf(h) - 0.5 * ((s + t).powf(h) + (s - t).abs().powf(h))
    }
}

impl Covariance for LeiNualartCov {
    fn name(&self) -> &'static str {
        Self::NAME
    }
    fn hurst(&self) -> f64 {
        self.h
    }
    fn cov(&self, t: f64, s: f64) -> f64 {
        let h = self.h;
        let bracket = t.powf(h) + s.powf(h) - (t + s).powf(h);
        if h < 1.0 {
            self.scale * bracket
        } else {
            -self.scale * bracket
        }
    }
}

/// Serializable covariance selection: registry name plus `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovModel {
    pub model: String,
    pub hurst: f64,
}

impl CovModel {
    pub fn new(model: &str, hurst: f64) -> Self {
        Self {
            model: model.to_string(),
            hurst,
        }
    }

    pub fn fbm(hurst: f64) -> Self {
        Self::new(FbmCov::NAME, hurst)
    }

    pub fn sub_fbm(hurst: f64) -> Self {
        Self::new(SubFbmCov::NAME, hurst)
    }

    pub fn lei_nualart(hurst: f64) -> Self {
        Self::new(LeiNualartCov::NAME, hurst)
    }

    pub fn build(&self) -> Result<Box<dyn Covariance>> {
        covariance_registry().create(&self.model, &self.hurst)
    }
}

/// Default covariance registry: `fbm`, `subfbm`, `lei-nualart`.
pub fn covariance_registry() -> &'static Registry<f64, dyn Covariance> {
    static REG: OnceLock<Registry<f64, dyn Covariance>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg: Registry<f64, dyn Covariance> = Registry::new("covariance model");
        reg.register(FbmCov::NAME, |h| Ok(Box::new(FbmCov::new(*h)?) as Box<dyn Covariance>));
        reg.register(SubFbmCov::NAME, |h| Ok(Box::new(SubFbmCov::new(*h)?) as Box<dyn Covariance>));
        reg.register(LeiNualartCov::NAME, |h| {
            Ok(Box::new(LeiNualartCov::new(*h)?) as Box<dyn Covariance>)
        });
        reg
    })
}
