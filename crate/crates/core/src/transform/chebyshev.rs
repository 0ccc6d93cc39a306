//! Running integral `x ↦ ∫_0^x f(t, s) ds` of one kernel slice, stored as
//! piecewise Chebyshev antiderivatives.
//!
//! Cells next to a singular breakpoint are graded geometrically (halving
//! widths) toward it; the mass closer than the last cell is extrapolated
//! from the geometric decay of the cell integrals.

use std::f64::consts::PI;
use crate::error::{Error, Result};
use crate::kernels::Kernel;

const ORDER: usize = 16;
const MAX_SPLIT_DEPTH: u32 = 48;
const MAX_GRADED: usize = 400;

#[derive(Debug, Clone)]
enum Shape {
    /// Antiderivative coefficients on the local variable `x ∈ [-1, 1]`,
    /// normalized so that `F(-1) = 0`.
    Cheb([f64; ORDER + 1]),
    /// Mass `mass` spread as `mass · (o / off_hi)^beta` for offsets
    /// `o ∈ [0, off_hi]`.
    Power { mass: f64, beta: f64 },
}

#[derive(Debug, Clone)]
struct Cell {
    anchor: f64,
    /// +1 when offsets grow to the right of `anchor`, -1 to the left
    dir: f64,
    off_lo: f64,
    off_hi: f64,
    lo: f64,
    hi: f64,
    base: f64,
    total: f64,
    shape: Shape,
}

impl Cell {
    /// Integral from the cell's absolute left edge up to absolute offset `o`.
    fn partial(&self, o: f64) -> f64 {
        let o = o.clamp(self.off_lo, self.off_hi);
        let from_anchor = match &self.shape {
            Shape::Cheb(coef) => {
                let half = 0.5 * (self.off_hi - self.off_lo);
                let x = ((o - self.off_lo) / half - 1.0).clamp(-1.0, 1.0);
                half * clenshaw(coef, x)
            }
            Shape::Power { mass, beta } => {
                if self.off_hi == 0.0 {
                    *mass
                } else {
                    mass * (o / self.off_hi).powf(*beta)
                }
            }
        };
        // `from_anchor` is the integral over offsets [off_lo, o]
        if self.dir > 0.0 {
            from_anchor
        } else {
            self.total - from_anchor
        }
    }

    fn offset_of(&self, x: f64) -> f64 {
        if self.dir > 0.0 {
            x - self.anchor
        } else {
            self.anchor - x
        }
    }
}

fn clenshaw(coef: &[f64; ORDER + 1], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coef[1..].iter().rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + coef[0]
}

fn cheb_nodes() -> [f64; ORDER] {
    let mut x = [0.0; ORDER];
    for (j, v) in x.iter_mut().enumerate() {
        *v = (PI * (j as f64 + 0.5) / ORDER as f64).cos();
    }
    x
}

struct Fit {
    antider: [f64; ORDER + 1],
    integral: f64,
    tail: f64,
    scale: f64,
}

fn fit(values: &[f64; ORDER], half: f64) -> Fit {
    let n = ORDER as f64;
    let mut a = [0.0; ORDER + 2];
    for (k, ak) in a.iter_mut().enumerate().take(ORDER) {
        let mut s = 0.0;
        for (j, v) in values.iter().enumerate() {
            s += v * (PI * k as f64 * (j as f64 + 0.5) / n).cos();
        }
        *ak = 2.0 * s / n;
    }
    let mut b = [0.0; ORDER + 1];
    for k in 1..=ORDER {
        b[k] = (a[k - 1] - a[k + 1]) / (2.0 * k as f64);
    }
    let mut at_minus_one = 0.0;
    for (k, bk) in b.iter().enumerate().skip(1) {
        at_minus_one += if k % 2 == 0 { *bk } else { -*bk };
    }
    b[0] = -at_minus_one;
    let integral = half * clenshaw(&b, 1.0);
    let tail = a[ORDER - 1].abs() + a[ORDER - 2].abs();
    let scale = a[..ORDER].iter().fold(0.5 * a[0].abs(), |m, v| m.max(v.abs()));
    Fit {
        antider: b,
        integral,
        tail,
        scale,
    }
}

/// Piecewise Chebyshev running integral of `f(t, ·)` on `[0, end]`.
#[derive(Debug, Clone)]
pub struct ChebCumulative {
    cells: Vec<Cell>,
    end: f64,
    total: f64,
    evaluations: usize,
}

struct Builder<'a> {
    kernel: &'a dyn Kernel,
    t: f64,
    tol: f64,
    nodes: [f64; ORDER],
    evaluations: usize,
    max_evaluations: usize,
}

impl Builder<'_> {
    fn sample(&mut self, anchor: f64, dir: f64, off_lo: f64, off_hi: f64) -> Result<[f64; ORDER]> {
        let mid = 0.5 * (off_lo + off_hi);
        let half = 0.5 * (off_hi - off_lo);
        let mut out = [0.0; ORDER];
        for (v, x) in out.iter_mut().zip(self.nodes) {
            let o = mid + half * x;
            *v = if dir < 0.0 && anchor == self.t {
                self.kernel.eval_before(self.t, o)
            } else {
                self.kernel.eval(self.t, anchor + dir * o)
            };
            if !v.is_finite() {
                return Err(Error::SingularPoint(format!(
                    "kernel '{}' is not finite at t = {}, s = {}",
                    self.kernel.name(),
                    self.t,
                    anchor + dir * o
                )));
            }
        }
        self.evaluations += ORDER;
        if self.evaluations > self.max_evaluations {
            return Err(Error::BudgetExceeded {
                used: self.evaluations,
                limit: self.max_evaluations,
                lo: anchor,
                hi: anchor + dir * off_hi,
            });
        }
        Ok(out)
    }

    /// Adaptive cells on offsets `[off_lo, off_hi]`, returned in increasing
    /// offset order.
    fn adaptive(&mut self, anchor: f64, dir: f64, off_lo: f64, off_hi: f64, out: &mut Vec<Cell>) -> Result<()> {
        let mut stack = vec![(off_lo, off_hi, 0u32)];
        let mut done = Vec::new();
        while let Some((lo, hi, depth)) = stack.pop() {
            let vals = self.sample(anchor, dir, lo, hi)?;
            let f = fit(&vals, 0.5 * (hi - lo));
            let mid = 0.5 * (lo + hi);
            if f.tail <= self.tol * f.scale || depth >= MAX_SPLIT_DEPTH || mid <= lo || mid >= hi {
                done.push(Cell {
                    anchor,
                    dir,
                    off_lo: lo,
                    off_hi: hi,
                    lo: 0.0,
                    hi: 0.0,
                    base: 0.0,
                    total: f.integral,
                    shape: Shape::Cheb(f.antider),
                });
            } else {
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            }
        }
        out.extend(done);
        Ok(())
    }

    /// Cells on offsets `[0, width]` from `anchor`, graded toward offset 0,
    /// in increasing offset order.
    fn graded(&mut self, anchor: f64, dir: f64, width: f64) -> Result<Vec<Cell>> {
        let mut rings: Vec<Vec<Cell>> = Vec::new();
        let mut ring_totals: Vec<f64> = Vec::new();
        let mut hi = width;
        let mut acc = 0.0;
        for _ in 0..MAX_GRADED {
            let lo = 0.5 * hi;
            let mut ring = Vec::new();
            self.adaptive(anchor, dir, lo, hi, &mut ring)?;
            let ring_total: f64 = ring.iter().map(|c| c.total).sum();
            acc += ring_total.abs();
            rings.push(ring);
            ring_totals.push(ring_total);
            hi = lo;
            let n = ring_totals.len();
            if n >= 4 && ring_total.abs() <= 1e-3 * self.tol * acc && ring_totals[n - 2].abs() <= 1e-2 * self.tol * acc {
                break;
            }
            if hi < 1e-280 {
                break;
            }
        }
        // geometric extrapolation of the remaining mass in [0, hi]
        let n = ring_totals.len();
        let (last, prev) = (ring_totals[n - 1], ring_totals[n.saturating_sub(2)]);
        let ratio = if n >= 2 && prev != 0.0 { last / prev } else { 0.0 };
        let (mass, beta) = if ratio > 0.0 && ratio < 1.0 {
            (last * ratio / (1.0 - ratio), (1.0 / ratio).log2())
        } else {
            (0.0, 1.0)
        };
        let mut cells = vec![Cell {
            anchor,
            dir,
            off_lo: 0.0,
            off_hi: hi,
            lo: 0.0,
            hi: 0.0,
            base: 0.0,
            total: mass,
            shape: Shape::Power { mass, beta },
        }];
        for ring in rings.into_iter().rev() {
            cells.extend(ring);
        }
        Ok(cells)
    }
}

impl ChebCumulative {
    /// Builds the table of `f(t, ·)` on `[0, end]`. `tol` bounds the
    /// relative size of the trailing Chebyshev coefficients in each cell.
    pub fn build(kernel: &dyn Kernel, t: f64, end: f64, tol: f64, max_evaluations: usize) -> Result<Self> {
        if !(end >= 0.0) || !end.is_finite() {
            return Err(Error::invalid(format!("integration end must be finite, got {end}")));
        }
        let mut builder = Builder {
            kernel,
            t,
            tol,
            nodes: cheb_nodes(),
            evaluations: 0,
            max_evaluations,
        };
        let mut cells: Vec<Cell> = Vec::new();
        if end > 0.0 {
            let points = kernel.breakpoints(t, end);
            let mut marks: Vec<(f64, bool)> = points
                .iter()
                .filter(|b| b.at >= 0.0 && b.at <= end)
                .map(|b| (b.at, b.exponent.is_some()))
                .collect();
            marks.push((0.0, false));
            marks.push((end, false));
            marks.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
            marks.dedup_by(|b, a| a.0 == b.0);
            for w in marks.windows(2) {
                let ((a, sing_a), (b, sing_b)) = (w[0], w[1]);
                if b <= a {
                    continue;
                }
                match (sing_a, sing_b) {
                    (false, false) => builder.adaptive(a, 1.0, 0.0, b - a, &mut cells)?,
                    (true, false) => cells.extend(builder.graded(a, 1.0, b - a)?),
                    (false, true) => cells.extend(builder.graded(b, -1.0, b - a)?.into_iter().rev()),
                    (true, true) => {
                        let half = 0.5 * (b - a);
                        cells.extend(builder.graded(a, 1.0, half)?);
                        cells.extend(builder.graded(b, -1.0, b - a - half)?.into_iter().rev());
                    }
                }
            }
        }
        let mut base = 0.0;
        for c in &mut cells {
            c.base = base;
            base += c.total;
            let (p, q) = (c.anchor + c.dir * c.off_lo, c.anchor + c.dir * c.off_hi);
            c.lo = p.min(q);
            c.hi = p.max(q);
        }
        Ok(Self {
            cells,
            end,
            total: base,
            evaluations: builder.evaluations,
        })
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn cells(&self) -> usize {
        self.cells.len()
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Index of the cell holding `x`, for `0 < x < end`.
    fn locate(&self, x: f64, hint: usize) -> usize {
        let cells = &self.cells;
        let mut i = if hint < cells.len() && cells[hint].lo <= x && x <= cells[hint].hi {
            hint
        } else {
            cells.partition_point(|c| c.hi < x).min(cells.len() - 1)
        };
        // Absolute bounds of cells hugging a non-zero anchor can round onto
        // each other; settle on the cell whose offset range holds x.
        for _ in 0..cells.len() {
            let c = &cells[i];
            let o = c.offset_of(x);
            let before = if c.dir > 0.0 { o < c.off_lo } else { o > c.off_hi };
            let after = if c.dir > 0.0 { o > c.off_hi } else { o < c.off_lo };
            if before && i > 0 {
                i -= 1;
            } else if after && i + 1 < cells.len() {
                i += 1;
            } else {
                break;
            }
        }
        i
    }

    /// `∫_0^x f(t, s) ds`, clamped to `[0, end]`.
    pub fn at(&self, x: f64) -> f64 {
        self.at_with_hint(x, 0).0
    }

    /// Same as [`at`](Self::at), starting the cell search at `hint`; returns
    /// the cell used so monotone query sequences cost O(1) each.
    #[inline]
    pub fn at_with_hint(&self, x: f64, hint: usize) -> (f64, usize) {
        if x <= 0.0 || self.cells.is_empty() {
            return (0.0, 0);
        }
        if x >= self.end {
            return (self.total, self.cells.len() - 1);
        }
        let i = self.locate(x, hint);
        let c = &self.cells[i];
        (c.base + c.partial(c.offset_of(x)), i)
    }
}
