use crate::error::{Error, Result};
use crate::quadrature::AdaptiveGl;

use super::{check_hurst, d_h, Breakpoint, Kernel, KernelSpec};

/// Volterra kernel `K^H(t, s)` representing fBm (covariance
/// `½(t^H + s^H − |t−s|^H)`, `H ∈ (0, 2)`) as `∫_0^t K^H(t, s) dW_s`:
///
/// `K^H(t,s) = d^H (t−s)^{(H−1)/2}
///           + d^H (1−H)/2 ∫_s^t (u−s)^{(H−3)/2} (1 − (s/u)^{(1−H)/2}) du`
///
/// for `0 < s < t`, zero for `s > t`.
///
/// The inner integral is evaluated after `u = s + (t−s) v^{2/(H+1)}`, which
/// turns it into `(t−s)^{(H−1)/2} · p · Q((t−s)/s)` with
/// `Q(q) = ∫_0^1 v^{−p} (1 − (1 + q v^p)^{−(1−H)/2}) dv`, `p = 2/(H+1)`, whose
/// integrand is bounded at `v = 0`.
#[derive(Debug, Clone)]
pub struct FbmVolterra {
    h: f64,
    d: f64,
    c: f64,
    p: f64,
    inner: AdaptiveGl,
}

impl FbmVolterra {
    pub const NAME: &'static str = "fbm";
    pub const DEFAULT_INNER_TOL: f64 = 1e-8;

    pub fn new(h: f64) -> Result<Self> {
        check_hurst(h)?;
        Ok(Self {
            h,
            d: d_h(h)?,
            c: 0.5 * (1.0 - h),
            p: 2.0 / (h + 1.0),
            inner: AdaptiveGl::new(Self::DEFAULT_INNER_TOL, 2_000_000),
        })
    }

    /// Relative tolerance of the inner integral.
    pub fn with_inner_tol(mut self, tol: f64) -> Self {
        self.inner.rel_tol = tol;
        self
    }

    pub fn normalizer(&self) -> f64 {
        self.d
    }

    /// `K^H(s + gap, s)` for `s > 0`, `gap > 0`.
    fn profile(&self, s: f64, gap: f64) -> f64 {
        if self.h == 1.0 {
            return 1.0;
        }
        let lead = gap.powf(-self.c);
        self.d * lead * (1.0 + self.c * self.p * self.q_integral(gap / s))
    }

    fn q_integral(&self, q: f64) -> f64 {
        let (c, p) = (self.c, self.p);
        let integrand = |v: f64| {
            let vp = v.powf(p);
            -(-c * (q * vp).ln_1p()).exp_m1() / vp
        };
        let run = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| -> f64 {
            match self.inner.integrate(f, a, b) {
                Ok((v, _)) => v,
                Err(_) => f64::NAN,
            }
        };
        if q <= 1.0 {
            return run(&integrand, 0.0, 1.0);
        }
        // Past v0 the integrand decays like v^{-p} over many decades; integrate
        // that part in log v.
        let v0 = q.powf(-1.0 / p);
        let head = run(&integrand, 0.0, v0);
        let tail = run(&|tau: f64| {
            let v = tau.exp();
            integrand(v) * v
        }, v0.ln(), 0.0);
        head + tail
    }
}

impl Kernel for FbmVolterra {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn spec(&self) -> KernelSpec {
        KernelSpec::fbm(self.h)
    }

    fn hurst(&self) -> Option<f64> {
        Some(self.h)
    }

    fn eval(&self, t: f64, s: f64) -> f64 {
        if s > t || t <= 0.0 || s < 0.0 {
            return 0.0;
        }
        if self.h == 1.0 {
            return 1.0;
        }
        if s == t {
            return if self.h < 1.0 { f64::INFINITY } else { 0.0 };
        }
        if s == 0.0 {
            return f64::INFINITY;
        }
        self.profile(s, t - s)
    }

    fn eval_before(&self, t: f64, gap: f64) -> f64 {
        if gap <= 0.0 {
            return self.eval(t, t);
        }
        let s = t - gap;
        if s < 0.0 {
            return 0.0;
        }
        if self.h == 1.0 {
            return 1.0;
        }
        if s == 0.0 {
            return f64::INFINITY;
        }
        self.profile(s, gap)
    }

    fn support_end(&self, t: f64) -> Option<f64> {
        Some(t)
    }

    fn breakpoints(&self, t: f64, upper: f64) -> Vec<Breakpoint> {
        let end = upper.min(t);
        let edge = |e: f64| if self.h == 1.0 { None } else { Some(e) };
        vec![
            Breakpoint {
                at: 0.0,
                exponent: edge(-(1.0 - self.h).abs() / 2.0),
            },
            Breakpoint {
                at: end,
                exponent: if end == t { edge(-self.c) } else { None },
            },
        ]
    }

    fn tail_l2_bound(&self, t: f64, radius: f64) -> f64 {
        if radius >= t {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Checked evaluation of `K^H(t, s)`.
///
/// `s = 0` (for `H ≠ 1`) and `s = t` (for `H < 1`) are singular points of
/// the kernel and are reported as errors instead of evaluated.
pub fn fbm_kernel(h: f64, t: f64, s: f64) -> Result<f64> {
    let k = FbmVolterra::new(h)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("fbm_kernel needs t > 0, got {t}")));
    }
    if !(s >= 0.0) {
        return Err(Error::invalid(format!("fbm_kernel needs s >= 0, got {s}")));
    }
    if h != 1.0 {
        if s == 0.0 {
            return Err(Error::SingularPoint(format!(
                "K^H(t, s) diverges like s^{:.3} at s = 0 for H = {h}",
                -(1.0 - h).abs() / 2.0
            )));
        }
        if s == t && h < 1.0 {
            return Err(Error::SingularPoint(format!(
                "K^H(t, s) diverges like (t-s)^{:.3} at s = t for H = {h}",
                (h - 1.0) / 2.0
            )));
        }
    }
    Ok(k.eval(t, s))
}
