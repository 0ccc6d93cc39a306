//! Strategies for `∫_a^b f(t, s) ds` over the Poisson segments of one path.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::kernels::{Cumulative, Kernel};
use crate::quadrature::AdaptiveGl;
use crate::registry::Registry;

use super::chebyshev::ChebCumulative;

/// Walk state carried across consecutive segments of one path.
#[derive(Debug, Clone, Copy)]
pub struct Cursor {
    hint: usize,
    last_x: f64,
    last_value: f64,
    pub nodes: usize,
}

impl Default for Cursor {
    fn default() -> Self {
        Self {
            hint: 0,
            last_x: 0.0,
            last_value: 0.0,
            nodes: 0,
        }
    }
}

/// `f(t, ·)` on `[0, end]`, prepared for repeated segment integrals.
pub trait SliceIntegral: Send + Sync {
    fn end(&self) -> f64;

    /// `∫_a^b f(t, s) ds` for `0 ≤ a ≤ b ≤ end`. Calls made in increasing
    /// order of `a` with the same cursor are the fast path.
    fn integral(&self, a: f64, b: f64, cursor: &mut Cursor) -> Result<f64>;
}

/// Settings handed to an integrator when a slice is prepared.
#[derive(Debug, Clone, Copy)]
pub struct SliceSettings {
    pub quad_tol: f64,
    pub max_nodes: usize,
}

pub trait SegmentIntegrator: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn prepare(&self, kernel: &Arc<dyn Kernel>, t: f64, end: f64, settings: SliceSettings) -> Result<Box<dyn SliceIntegral>>;
}

/// Running-integral tables: each segment integral is a difference of two
/// table lookups. Kernels with a closed-form running integral use it
/// directly.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChebyshevIntegrator;

impl ChebyshevIntegrator {
    pub const NAME: &'static str = "chebyshev";
}

struct TableSlice(ChebCumulative);

impl SliceIntegral for TableSlice {
    fn end(&self) -> f64 {
        self.0.end()
    }

    #[inline]
    fn integral(&self, a: f64, b: f64, cursor: &mut Cursor) -> Result<f64> {
        let start = if a == cursor.last_x {
            cursor.last_value
        } else {
            let (v, h) = self.0.at_with_hint(a, cursor.hint);
            cursor.hint = h;
            v
        };
        let (v, h) = self.0.at_with_hint(b, cursor.hint);
        cursor.hint = h;
        cursor.last_x = b;
        cursor.last_value = v;
        Ok(v - start)
    }
}

struct ExactSlice {
    cum: Box<dyn Cumulative>,
    end: f64,
}

impl SliceIntegral for ExactSlice {
    fn end(&self) -> f64 {
        self.end
    }

    fn integral(&self, a: f64, b: f64, cursor: &mut Cursor) -> Result<f64> {
        let start = if a == cursor.last_x { cursor.last_value } else { self.cum.at(a) };
        let v = self.cum.at(b);
        cursor.last_x = b;
        cursor.last_value = v;
        Ok(v - start)
    }
}

impl SegmentIntegrator for ChebyshevIntegrator {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn prepare(&self, kernel: &Arc<dyn Kernel>, t: f64, end: f64, settings: SliceSettings) -> Result<Box<dyn SliceIntegral>> {
        if let Some(cum) = kernel.cumulative(t) {
            return Ok(Box::new(ExactSlice { cum, end }));
        }
        // the table tolerance sits a little below the requested one since
        // it bounds trailing coefficients, not the integral error itself
        let table = ChebCumulative::build(kernel.as_ref(), t, end, 0.1 * settings.quad_tol, settings.max_nodes)?;
        Ok(Box::new(TableSlice(table)))
    }
}

/// Adaptive Gauss–Legendre (order 15) on every segment. Segments touching a
/// singular breakpoint are integrated in `w = offset^{1+α}`, which turns an
/// `offset^α` endpoint behaviour into a smooth integrand.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdaptiveIntegrator;

impl AdaptiveIntegrator {
    pub const NAME: &'static str = "adaptive-gl";
}

struct AdaptiveSlice {
    kernel: Arc<dyn Kernel>,
    t: f64,
    end: f64,
    rule: AdaptiveGl,
    left_exponent: Option<f64>,
    right_exponent: Option<f64>,
}

impl AdaptiveSlice {
    /// `∫` over offsets `[o1, o2]` measured from `anchor` in direction `dir`.
    fn graded(&self, anchor: f64, dir: f64, o1: f64, o2: f64, alpha: f64, cursor: &mut Cursor) -> Result<f64> {
        let power = 1.0 + alpha;
        let m = 1.0 / power;
        let from_t = dir < 0.0 && anchor == self.t;
        let f = |w: f64| {
            let o = w.powf(m);
            let v = if from_t {
                self.kernel.eval_before(self.t, o)
            } else {
                self.kernel.eval(self.t, anchor + dir * o)
            };
            // ds = m w^{m-1} dw
            v * m * (o / w)
        };
        let (v, used) = self.rule.integrate(f, o1.powf(power), o2.powf(power))?;
        cursor.nodes += used;
        Ok(v)
    }

    fn plain(&self, a: f64, b: f64, cursor: &mut Cursor) -> Result<f64> {
        let (v, used) = self.rule.integrate(|s| self.kernel.eval(self.t, s), a, b)?;
        cursor.nodes += used;
        Ok(v)
    }
}

impl SliceIntegral for AdaptiveSlice {
    fn end(&self) -> f64 {
        self.end
    }

    fn integral(&self, a: f64, b: f64, cursor: &mut Cursor) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let at_left = a == 0.0 && self.left_exponent.is_some();
        let at_right = b == self.end && self.right_exponent.is_some();
        let value = match (at_left, at_right) {
            (false, false) => self.plain(a, b, cursor),
            (true, false) => self.graded(0.0, 1.0, 0.0, b, self.left_exponent.unwrap(), cursor),
            (false, true) => self.graded(self.end, -1.0, 0.0, self.end - a, self.right_exponent.unwrap(), cursor),
            (true, true) => {
                let mid = 0.5 * b;
                Ok(self.graded(0.0, 1.0, 0.0, mid, self.left_exponent.unwrap(), cursor)?
                    + self.graded(self.end, -1.0, 0.0, self.end - mid, self.right_exponent.unwrap(), cursor)?)
            }
        };
        let value = value.map_err(|e| match e {
            Error::BudgetExceeded { used, limit, .. } => Error::BudgetExceeded { used, limit, lo: a, hi: b },
            other => other,
        })?;
        if cursor.nodes > self.rule.max_nodes {
            return Err(Error::BudgetExceeded {
                used: cursor.nodes,
                limit: self.rule.max_nodes,
                lo: a,
                hi: b,
            });
        }
        Ok(value)
    }
}

impl SegmentIntegrator for AdaptiveIntegrator {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn prepare(&self, kernel: &Arc<dyn Kernel>, t: f64, end: f64, settings: SliceSettings) -> Result<Box<dyn SliceIntegral>> {
        let points = kernel.breakpoints(t, end);
        let exponent_at = |x: f64| points.iter().find(|p| p.at == x).and_then(|p| p.exponent);
        Ok(Box::new(AdaptiveSlice {
            kernel: Arc::clone(kernel),
            t,
            end,
            rule: AdaptiveGl::new(settings.quad_tol, settings.max_nodes),
            left_exponent: exponent_at(0.0),
            right_exponent: if end > 0.0 { exponent_at(end) } else { None },
        }))
    }
}

/// Default integrator registry: `chebyshev` (default) and `adaptive-gl`.
pub fn integrator_registry() -> &'static Registry<(), dyn SegmentIntegrator> {
    static REG: OnceLock<Registry<(), dyn SegmentIntegrator>> = OnceLock::new();
    REG.get_or_init(|| {
        let mut reg = Registry::new("integrator");
        reg.register(ChebyshevIntegrator::NAME, |_: &()| {
            Ok(Box::new(ChebyshevIntegrator) as Box<dyn SegmentIntegrator>)
        });
        reg.register(AdaptiveIntegrator::NAME, |_: &()| {
            Ok(Box::new(AdaptiveIntegrator) as Box<dyn SegmentIntegrator>)
        });
        reg
    })
}
