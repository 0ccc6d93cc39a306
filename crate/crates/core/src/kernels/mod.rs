//! Deterministic kernels `f(t, ·)`, the closed-form covariance models they
//! reproduce, and the constants tying them together.
//!
//! Kernels and covariance models are both looked up by name through
//! [`kernel_registry`] and [`covariance_registry`].

mod constants;
mod covariance;
mod fbm;
mod lei_nualart;
mod tabulated;
mod theta;

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registry::Registry;

pub use constants::{d_h, decomposition_constant, Regime};
pub use covariance::{covariance_registry, CovModel, Covariance, FbmCov, LeiNualartCov, SubFbmCov};
pub use fbm::{fbm_kernel, FbmVolterra};
pub use lei_nualart::{lei_nualart_kernel, LeiNualart};
pub use tabulated::Tabulated;
pub use theta::{validate_theta, ThetaParam, ThetaReport, DEFAULT_THETA_MARGIN};

/// A point in `[0, ∞)` where `f(t, ·)` is not smooth. When `exponent` is
/// set, `f` behaves like `|s - at|^exponent` next to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub at: f64,
    pub exponent: Option<f64>,
}

/// Closed-form running integral `x ↦ ∫_0^x f(t, s) ds`.
pub trait Cumulative: Send + Sync {
    fn at(&self, x: f64) -> f64;
}

/// A deterministic kernel `f(t, s)`, square integrable in `s` for each `t`.
pub trait Kernel: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn spec(&self) -> KernelSpec;

    fn hurst(&self) -> Option<f64> {
        None
    }

    /// `f(t, s)`. Non-finite at singular points.
    fn eval(&self, t: f64, s: f64) -> f64;

    /// `f(t, t - gap)` with the gap known exactly. Kernels singular at
    /// `s = t` override this so values near the singularity stay accurate.
    fn eval_before(&self, t: f64, gap: f64) -> f64 {
        self.eval(t, t - gap)
    }

    /// Right end of the s-support of `f(t, ·)`, `None` when unbounded.
    fn support_end(&self, t: f64) -> Option<f64>;

    /// Non-smooth points of `f(t, ·)` in `[0, upper]`, sorted, always
    /// including `0` and `upper`.
    fn breakpoints(&self, t: f64, upper: f64) -> Vec<Breakpoint>;

    /// Upper bound on `∫_R^∞ f(t, s)² ds`.
    fn tail_l2_bound(&self, t: f64, radius: f64) -> f64;

    fn cumulative(&self, _t: f64) -> Option<Box<dyn Cumulative>> {
        None
    }
}

/// Serializable description of a kernel: a registry name plus parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub knots: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    /// Tabulated only: multiply by `1_{[0,t]}(s)`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub causal: bool,
}

impl KernelSpec {
    pub fn fbm(hurst: f64) -> Self {
        Self::with_hurst(FbmVolterra::NAME, hurst)
    }

    pub fn lei_nualart(hurst: f64) -> Self {
        Self::with_hurst(LeiNualart::NAME, hurst)
    }

    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> Self {
        Self {
            kind: Tabulated::NAME.to_string(),
            hurst: None,
            knots,
            values,
            causal: false,
        }
    }

    fn with_hurst(kind: &str, hurst: f64) -> Self {
        Self {
            kind: kind.to_string(),
            hurst: Some(hurst),
            knots: Vec::new(),
            values: Vec::new(),
            causal: false,
        }
    }

    pub fn require_hurst(&self) -> Result<f64> {
        self.hurst
            .ok_or_else(|| Error::invalid(format!("kernel '{}' needs a hurst parameter", self.kind)))
    }

    /// Builds the kernel through the default registry.
    pub fn build(&self) -> Result<Box<dyn Kernel>> {
        kernel_registry().create(&self.kind, self)
    }
}

/// Default kernel registry: `fbm`, `lei-nualart`, `tabulated`.
pub fn kernel_registry() -> &'static Registry<KernelSpec, dyn Kernel> {
    static REG: OnceLock<Registry<KernelSpec, dyn Kernel>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg = Registry::new("kernel");
        reg.register(FbmVolterra::NAME, |spec: &KernelSpec| {
            Ok(Box::new(FbmVolterra::new(spec.require_hurst()?)?) as Box<dyn Kernel>)
        });
        reg.register(LeiNualart::NAME, |spec: &KernelSpec| {
            Ok(Box::new(LeiNualart::new(spec.require_hurst()?)?) as Box<dyn Kernel>)
        });
        reg.register(Tabulated::NAME, |spec: &KernelSpec| {
            let tab = Tabulated::new(spec.knots.clone(), spec.values.clone())?.causal(spec.causal);
            Ok(Box::new(tab) as Box<dyn Kernel>)
        });
        reg
    })
}

pub(crate) fn check_hurst(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 2.0) {
        return Err(Error::invalid(format!("H must lie in (0, 2), got {h}")));
    }
    Ok(())
}
