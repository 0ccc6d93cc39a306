//! Brute-force reference integrator used to validate kernels, covariances
//! and transforms.
//!
//! This code shares nothing with the production path: it uses a 7/15-point
//! Gauss–Kronrod pair with global (largest error first) subdivision, where
//! production uses Gauss–Legendre with local bisection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::kernels::Kernel;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub const DEFAULT_MAX_NODES: usize = 3_000_000;

/// Where the integrand is being sampled. Besides the position `x`, the exact
/// distances to the ends of the enclosing piece (the stretch between two
/// consecutive singular points) are supplied, so integrands can be evaluated
/// accurately right next to a singularity at a non-zero abscissa.
#[derive(Debug, Clone, Copy)]
pub struct Abscissa {
    pub x: f64,
    pub from_left: f64,
    pub from_right: f64,
    /// Left and right end of the enclosing piece (`right` may be `+∞`).
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub nodes_used: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    left: f64,
    right: f64,
    /// length in the integration variable (`x` for the mapped infinite piece)
    len: f64,
    infinite: bool,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    piece: usize,
    side: Side,
    /// offsets of the panel ends from the piece end given by `side`
    near: f64,
    far: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct Driver<'a, F> {
    f: &'a F,
    pieces: Vec<Piece>,
    nodes: usize,
}

impl<F: Fn(Abscissa) -> f64> Driver<'_, F> {
    /// Evaluates at offset `o` (integration variable) from `side` of `piece`,
    /// returning the integrand times the Jacobian.
    fn sample(&mut self, piece: usize, side: Side, o: f64) -> f64 {
        self.nodes += 1;
        let p = self.pieces[piece];
        let (from_left_var, from_right_var) = match side {
            Side::Left => (o, p.len - o),
            Side::Right => (p.len - o, o),
        };
        if !p.infinite {
            let x = match side {
                Side::Left => p.left + o,
                Side::Right => p.right - o,
            };
            let v = (self.f)(Abscissa {
                x,
                from_left: from_left_var,
                from_right: from_right_var,
                left: p.left,
                right: p.right,
            });
            return v;
        }
        // r = left + y/(1-y) with y = from_left_var in [0,1), 1-y = from_right_var
        let one_minus = from_right_var;
        let off = from_left_var / one_minus;
        let jac = 1.0 / (one_minus * one_minus);
        let v = (self.f)(Abscissa {
            x: p.left + off,
            from_left: off,
            from_right: f64::INFINITY,
            left: p.left,
            right: f64::INFINITY,
        });
        if v == 0.0 {
            0.0
        } else {
            v * jac
        }
    }

    fn panel(&mut self, piece: usize, side: Side, near: f64, far: f64, depth: u32) -> Panel {
        let center = 0.5 * (near + far);
        let half = 0.5 * (far - near);
        let fc = self.sample(piece, side, center);
        let mut res_k = fc * WGK[7];
        let mut res_g = fc * WG[3];
        let mut res_abs = res_k.abs();
        let mut fv1 = [0.0; 7];
        let mut fv2 = [0.0; 7];
        for j in 0..7 {
            let dx = half * XGK[j];
            let f1 = self.sample(piece, side, center - dx);
            let f2 = self.sample(piece, side, center + dx);
            fv1[j] = f1;
            fv2[j] = f2;
            res_k += WGK[j] * (f1 + f2);
            res_abs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                res_g += WG[j / 2] * (f1 + f2);
            }
        }
        let mean = 0.5 * res_k;
        let mut res_asc = WGK[7] * (fc - mean).abs();
        for j in 0..7 {
            res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
        }
        let value = res_k * half;
        let res_abs = res_abs * half;
        let res_asc = res_asc * half;
        let mut err = ((res_k - res_g) * half).abs();
        if res_asc != 0.0 && err != 0.0 {
            err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
        }
        if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * res_abs);
        }
        if !value.is_finite() {
            err = f64::INFINITY;
        }
        Panel {
            piece,
            side,
            near,
            far,
            value,
            error: err,
            depth,
        }
    }
}

/// Integrates `f` over `[a, b]` (`b` may be `+∞`) to absolute tolerance
/// `tol`, splitting at `singular_points`. Integrands must be finite strictly
/// inside each piece; piece ends are never sampled. Kinks belong in
/// `singular_points` too: a Kronrod panel straddling a kink can report a
/// tiny error for a wrong value.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64, singular_points: &[f64]) -> QuadResult
where
    F: Fn(Abscissa) -> f64,
{
    integrate_with_budget(f, a, b, tol, singular_points, DEFAULT_MAX_NODES)
}

pub fn integrate_with_budget<F>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    singular_points: &[f64],
    max_nodes: usize,
) -> QuadResult
where
    F: Fn(Abscissa) -> f64,
{
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            nodes_used: 0,
            converged: true,
        };
    }
    let mut cuts: Vec<f64> = singular_points
        .iter()
        .copied()
        .filter(|&p| p > a && p < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut ends = vec![a];
    ends.extend(cuts);
    ends.push(b);

    let pieces: Vec<Piece> = ends
        .windows(2)
        .map(|w| {
            if w[1].is_infinite() {
                Piece {
                    left: w[0],
                    right: f64::INFINITY,
                    len: 1.0,
                    infinite: true,
                }
            } else {
                Piece {
                    left: w[0],
                    right: w[1],
                    len: w[1] - w[0],
                    infinite: false,
                }
            }
        })
        .collect();

    let mut driver = Driver {
        f: &f,
        pieces,
        nodes: 0,
    };
    let mut heap = BinaryHeap::new();
    for i in 0..driver.pieces.len() {
        let half = 0.5 * driver.pieces[i].len;
        heap.push(driver.panel(i, Side::Left, 0.0, half, 0));
        heap.push(driver.panel(i, Side::Right, 0.0, half, 0));
    }

    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    loop {
        let (value, error) = heap
            .iter()
            .fold((frozen_value, frozen_error), |(v, e), p| (v + p.value, e + p.error));
        let converged = error <= tol && error.is_finite();
        if converged || driver.nodes >= max_nodes || heap.is_empty() {
            return QuadResult {
                value,
                abs_error_estimate: error,
                nodes_used: driver.nodes,
                converged,
            };
        }
        // refine a batch of the worst panels before re-summing
        for _ in 0..16 {
            let Some(worst) = heap.pop() else { break };
            let mid = 0.5 * (worst.near + worst.far);
            if worst.depth >= 400 || mid <= worst.near || mid >= worst.far {
                frozen_value += worst.value;
                frozen_error += worst.error;
                continue;
            }
            let d = worst.depth + 1;
            heap.push(driver.panel(worst.piece, worst.side, worst.near, mid, d));
            heap.push(driver.panel(worst.piece, worst.side, mid, worst.far, d));
            if heap.peek().is_none_or(|p| p.error <= tol * 1e-3) {
                break;
            }
        }
    }
}

/// Plain-function convenience wrapper around [`integrate`].
pub fn integrate_fn<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, singular_points: &[f64]) -> QuadResult {
    integrate(|x: Abscissa| f(x.x), a, b, tol, singular_points)
}

fn kernel_at(k: &dyn Kernel, time: f64, x: &Abscissa) -> f64 {
    if x.right.is_finite() && time >= x.right && x.from_right < x.from_left {
        k.eval_before(time, (time - x.right) + x.from_right)
    } else {
        k.eval(time, x.left + x.from_left)
    }
}

fn joint_domain(f: &dyn Kernel, t: f64, g: &dyn Kernel, s: f64) -> (f64, Vec<f64>) {
    let end = match (f.support_end(t), g.support_end(s)) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => f64::INFINITY,
    };
    let upper = if end.is_finite() { end } else { 1.0 };
    let mut points: Vec<f64> = f
        .breakpoints(t, upper)
        .into_iter()
        .chain(g.breakpoints(s, upper))
        .map(|b| b.at)
        .collect();
    if end.is_infinite() {
        points.retain(|&p| p != upper);
    }
    (end, points)
}

fn finish(res: QuadResult, what: &str) -> Result<QuadResult> {
    if res.converged {
        Ok(res)
    } else {
        Err(Error::NotConverged {
            what: what.to_string(),
            value: res.value,
            error: res.abs_error_estimate,
            nodes: res.nodes_used,
        })
    }
}

/// `∫ f(t, r) g(s, r) dr` over the common support.
pub fn cross_inner_product(f: &dyn Kernel, t: f64, g: &dyn Kernel, s: f64, tol: f64) -> Result<QuadResult> {
    let (end, points) = joint_domain(f, t, g, s);
    let res = integrate(
        |x: Abscissa| {
            let a = kernel_at(f, t, &x);
            if a == 0.0 {
                return 0.0;
            }
            a * kernel_at(g, s, &x)
        },
        0.0,
        end,
        tol,
        &points,
    );
    finish(res, "cross inner product")
}

/// `∫ k(t, r) k(s, r) dr`.
pub fn kernel_inner_product(k: &dyn Kernel, t: f64, s: f64, tol: f64) -> Result<QuadResult> {
    cross_inner_product(k, t, k, s, tol)
}

/// `∫ (k(t, r) − k(s, r))² dr`.
pub fn increment_norm_sq(k: &dyn Kernel, t: f64, s: f64, tol: f64) -> Result<QuadResult> {
    let (end, points) = joint_domain(k, t, k, s);
    let end = match (k.support_end(t), k.support_end(s)) {
        (Some(a), Some(b)) => a.max(b),
        _ => end,
    };
    let res = integrate(
        |x: Abscissa| {
            let d = kernel_at(k, t, &x) - kernel_at(k, s, &x);
            d * d
        },
        0.0,
        end,
        tol,
        &points,
    );
    finish(res, "increment norm")
}
