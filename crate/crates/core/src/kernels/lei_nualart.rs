use crate::error::{Error, Result};

use super::{check_hurst, Breakpoint, Kernel, KernelSpec};

/// `Φ^H(t, r) = (1 − e^{−rt}) r^{−(1+H)/2}` on `r ∈ (0, ∞)`, the kernel of
/// the Lei–Nualart process `X^H`.
#[derive(Debug, Clone)]
pub struct LeiNualart {
    h: f64,
    exponent: f64,
}

impl LeiNualart {
    pub const NAME: &'static str = "lei-nualart";

    pub fn new(h: f64) -> Result<Self> {
        check_hurst(h)?;
        Ok(Self {
            h,
            exponent: -(1.0 + h) / 2.0,
        })
    }
}

impl Kernel for LeiNualart {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn spec(&self) -> KernelSpec {
        KernelSpec::lei_nualart(self.h)
    }

    fn hurst(&self) -> Option<f64> {
        Some(self.h)
    }

    fn eval(&self, t: f64, r: f64) -> f64 {
        if r < 0.0 || r.is_nan() {
            return f64::NAN;
        }
        if t == 0.0 {
            return 0.0;
        }
        if r == 0.0 {
            // (1 − e^{−rt}) r^{−(1+H)/2} ~ t r^{(1−H)/2}
            return match self.h.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Less) => 0.0,
                Some(std::cmp::Ordering::Equal) => t,
                _ => f64::INFINITY,
            };
        }
        -(-r * t).exp_m1() * r.powf(self.exponent)
    }

    fn support_end(&self, _t: f64) -> Option<f64> {
        None
    }

    fn breakpoints(&self, _t: f64, upper: f64) -> Vec<Breakpoint> {
        vec![
            Breakpoint {
                at: 0.0,
                exponent: (self.h != 1.0).then_some((1.0 - self.h) / 2.0),
            },
            Breakpoint {
                at: upper,
                exponent: None,
            },
        ]
    }

    /// `∫_R^∞ (1−e^{−rt})² r^{−(1+H)} dr ≤ R^{−H}/H`.
    fn tail_l2_bound(&self, _t: f64, radius: f64) -> f64 {
        radius.powf(-self.h) / self.h
    }
}

/// Checked evaluation of `Φ^H(t, r)`.
pub fn lei_nualart_kernel(h: f64, t: f64, r: f64) -> Result<f64> {
    let k = LeiNualart::new(h)?;
    if !(r >= 0.0) {
        return Err(Error::invalid(format!("lei_nualart_kernel needs r >= 0, got {r}")));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid(format!("lei_nualart_kernel needs t >= 0, got {t}")));
    }
    if r == 0.0 && h > 1.0 && t > 0.0 {
        return Err(Error::SingularPoint(format!(
            "Φ^H(t, r) diverges like r^{:.3} at r = 0 for H = {h}",
            (1.0 - h) / 2.0
        )));
    }
    Ok(k.eval(t, r))
}
