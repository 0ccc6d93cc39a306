use std::sync::Arc;

use crate::error::{Error, Result};

use super::{Breakpoint, Cumulative, Kernel, KernelSpec};

/// User-supplied kernel: piecewise linear in `s` through `(knots, values)`,
/// zero outside `[knots[0], knots[last]]`. The same profile is used for every
/// `t` unless the kernel is causal, in which case it is cut at `s = t`.
#[derive(Debug, Clone)]
pub struct Tabulated {
    table: Arc<Table>,
    causal: bool,
}

#[derive(Debug)]
struct Table {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// running integral at each knot
    cum: Vec<f64>,
}

impl Table {
    fn locate(&self, x: f64) -> Option<usize> {
        let k = &self.knots;
        if x < k[0] || x > k[k.len() - 1] {
            return None;
        }
        let i = k.partition_point(|&v| v <= x);
        Some(i.saturating_sub(1).min(k.len() - 2))
    }

    fn value(&self, x: f64) -> f64 {
        match self.locate(x) {
            None => 0.0,
            Some(i) => {
                let (x0, x1) = (self.knots[i], self.knots[i + 1]);
                let (y0, y1) = (self.values[i], self.values[i + 1]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    fn integral_to(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0] {
            return 0.0;
        }
        if x >= k[k.len() - 1] {
            return self.cum[k.len() - 1];
        }
        let i = self.locate(x).unwrap_or(0);
        let (x0, x1) = (k[i], k[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let dx = x - x0;
        self.cum[i] + y0 * dx + 0.5 * (y1 - y0) * dx * dx / (x1 - x0)
    }

    /// `∫_a^∞ f²` exactly (piecewise quadratic).
    fn square_tail(&self, a: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.knots.len() - 1 {
            let (x0, x1) = (self.knots[i], self.knots[i + 1]);
            if x1 <= a {
                continue;
            }
            let lo = x0.max(a);
            let (ya, yb) = (self.value(lo), self.values[i + 1]);
            acc += (x1 - lo) / 3.0 * (ya * ya + ya * yb + yb * yb);
        }
        acc
    }
}

struct TabulatedCumulative {
    table: Arc<Table>,
    limit: f64,
}

impl Cumulative for TabulatedCumulative {
    fn at(&self, x: f64) -> f64 {
        self.table.integral_to(x.min(self.limit))
    }
}

impl Tabulated {
    pub const NAME: &'static str = "tabulated";

    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::invalid(format!(
                "tabulated kernel needs >= 2 knots and as many values (got {} knots, {} values)",
                knots.len(),
                values.len()
            )));
        }
        if !(knots[0] >= 0.0) || knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::invalid("tabulated knots must be finite and non-negative"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("tabulated knots must be strictly increasing"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tabulated values must be finite"));
        }
        let mut cum = vec![0.0; knots.len()];
        for i in 1..knots.len() {
            cum[i] = cum[i - 1] + 0.5 * (values[i - 1] + values[i]) * (knots[i] - knots[i - 1]);
        }
        Ok(Self {
            table: Arc::new(Table { knots, values, cum }),
            causal: false,
        })
    }

    /// Indicator of `[a, b]` with value `level`.
    pub fn indicator(a: f64, b: f64, level: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![level, level])
    }

    pub fn causal(mut self, causal: bool) -> Self {
        self.causal = causal;
        self
    }

    pub fn knots(&self) -> &[f64] {
        &self.table.knots
    }

    /// `∫ f²` over the whole table.
    pub fn l2_norm_sq(&self) -> f64 {
        self.table.square_tail(0.0)
    }
}

impl Kernel for Tabulated {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn spec(&self) -> KernelSpec {
        let mut spec = KernelSpec::tabulated(self.table.knots.clone(), self.table.values.clone());
        spec.causal = self.causal;
        spec
    }

    fn eval(&self, t: f64, s: f64) -> f64 {
        if self.causal && s > t {
            return 0.0;
        }
        self.table.value(s)
    }

    fn support_end(&self, t: f64) -> Option<f64> {
        let end = *self.table.knots.last().unwrap();
        Some(if self.causal { end.min(t) } else { end })
    }

    fn breakpoints(&self, t: f64, upper: f64) -> Vec<Breakpoint> {
        let upper = if self.causal { upper.min(t) } else { upper };
        let mut points = vec![Breakpoint {
            at: 0.0,
            exponent: None,
        }];
        for &k in &self.table.knots {
            if k > 0.0 && k < upper {
                points.push(Breakpoint {
                    at: k,
                    exponent: None,
                });
            }
        }
        points.push(Breakpoint {
            at: upper,
            exponent: None,
        });
        points
    }

    fn tail_l2_bound(&self, t: f64, radius: f64) -> f64 {
        if self.causal && radius >= t {
            return 0.0;
        }
        self.table.square_tail(radius)
    }

    fn cumulative(&self, t: f64) -> Option<Box<dyn Cumulative>> {
        Some(Box::new(TabulatedCumulative {
            table: Arc::clone(&self.table),
            limit: if self.causal { t } else { f64::INFINITY },
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_interpolation_and_support() {
        let k = Tabulated::new(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(k.eval(0.0, 0.5), 1.0);
        assert_eq!(k.eval(0.0, 1.5), 1.0);
        assert_eq!(k.eval(0.0, 2.5), 0.0);
        let cum = k.cumulative(0.0).unwrap();
        assert!((cum.at(1.0) - 1.0).abs() < 1e-15);
        assert!((cum.at(1.5) - 1.75).abs() < 1e-15);
        assert!((cum.at(10.0) - 2.0).abs() < 1e-15);
        // ∫ f² = 2 · ∫_0^1 (2x)² = 8/3
        assert!((k.l2_norm_sq() - 8.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn causal_cut() {
        let k = Tabulated::indicator(0.0, 2.0, 1.0).unwrap().causal(true);
        assert_eq!(k.eval(1.0, 1.5), 0.0);
        assert_eq!(k.support_end(1.0), Some(1.0));
        assert!((k.cumulative(1.0).unwrap().at(2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(Tabulated::new(vec![0.0], vec![1.0]).is_err());
        assert!(Tabulated::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Tabulated::new(vec![-1.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Tabulated::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(Tabulated::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn tail_of_squares() {
        let k = Tabulated::indicator(0.0, 3.0, 2.0).unwrap();
        assert!((k.tail_l2_bound(0.0, 1.0) - 8.0).abs() < 1e-14);
    }
}
