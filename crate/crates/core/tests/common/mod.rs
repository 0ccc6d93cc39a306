#![allow(dead_code)]

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use kacstroock::kernels::Kernel;
use kacstroock::PoissonPath;

pub struct Uniform(ChaCha8Rng);

impl Uniform {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }
}

/// Midpoint Riemann sum of `(2/ε) ∫_0^end f(t, s) e^{iθ N_{2s/ε²}} ds`
/// with `steps` cells, counting jumps directly on the path.
pub fn riemann_oracle(kernel: &dyn Kernel, t: f64, end: f64, path: &PoissonPath, eps: f64, theta: f64, steps: usize) -> (f64, f64) {
    let h = end / steps as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..steps {
        let s = (i as f64 + 0.5) * h;
        let n = path.count_at(2.0 * s / (eps * eps)).unwrap() as f64;
        let f = kernel.eval(t, s);
        re += f * (theta * n).cos();
        im += f * (theta * n).sin();
    }
    (2.0 / eps * re * h, 2.0 / eps * im * h)
}

/// Random piecewise-linear kernel on `[0, 1]`.
pub fn random_table(u: &mut Uniform) -> (Vec<f64>, Vec<f64>) {
    let n = 3 + (u.next(0.0, 6.0) as usize);
    let mut knots: Vec<f64> = (0..n).map(|_| u.next(0.0, 1.0)).collect();
    knots.push(0.0);
    knots.push(1.0);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let values = knots.iter().map(|_| u.next(-2.0, 2.0)).collect();
    (knots, values)
}

/// Interarrival times with mean `mean`.
pub fn random_gaps(u: &mut Uniform, count: usize, mean: f64) -> Vec<f64> {
    (0..count).map(|_| -mean * (1.0 - u.next(0.0, 1.0)).ln()).collect()
}
