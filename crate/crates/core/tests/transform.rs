mod common;

use std::f64::consts::PI;

use common::{random_gaps, random_table, riemann_oracle, Uniform};
use kacstroock::ensemble::{run, EnsembleConfig, Mode};
use kacstroock::kernels::{FbmVolterra, Kernel, KernelSpec, ThetaParam};
use kacstroock::oracle::integrate;
use kacstroock::transform::{transform, ApproxParams, PreparedTransform};
use kacstroock::PoissonPath;

fn params(eps: f64, theta: f64) -> ApproxParams {
    ApproxParams::new(eps, ThetaParam::new(theta).unwrap())
}

#[test]
fn matches_riemann_sums_on_injected_paths() {
    let mut u = Uniform::new(3);
    for case in 0..20 {
        let (knots, values) = random_table(&mut u);
        let spec = KernelSpec::tabulated(knots, values);
        let kernel = spec.build().unwrap();
        let eps = u.next(0.3, 1.0);
        let theta = u.next(0.2, 3.0);
        let path = PoissonPath::from_interarrivals(&random_gaps(&mut u, 40, 0.5), 2.0 / (eps * eps)).unwrap();
        let got = transform(&spec, &[1.0], &path, &params(eps, theta)).unwrap();
        let (re, im) = riemann_oracle(kernel.as_ref(), 1.0, 1.0, &path, eps, theta, 100_000);
        let scale = 2.0 / eps * (0..1000).map(|i| kernel.eval(1.0, (i as f64 + 0.5) / 1000.0).abs()).sum::<f64>() / 1000.0;
        assert!((got.cos_values[0] - re).abs() < 1e-4 * scale, "case {case} cos: {} vs {re}", got.cos_values[0]);
        assert!((got.sin_values[0] - im).abs() < 1e-4 * scale, "case {case} sin: {} vs {im}", got.sin_values[0]);
    }
}

#[test]
fn exact_on_piecewise_constant_kernels() {
    let eps = 0.5;
    let gaps = [0.3, 0.9, 0.25, 1.7, 0.4];
    let path = PoissonPath::from_interarrivals(&gaps, 20.0).unwrap();
    // the kernel is constant up to the fourth segment boundary
    let end = eps * eps / 2.0 * gaps[..4].iter().sum::<f64>();
    let spec = KernelSpec::tabulated(vec![0.0, end], vec![1.5, 1.5]);
    let theta = 1.3;
    let v = transform(&spec, &[1.0], &path, &params(eps, theta)).unwrap();
    let (mut lo, mut re, mut im) = (0.0, 0.0, 0.0);
    let mut clock = 0.0;
    for (k, g) in gaps[..4].iter().enumerate() {
        clock += g;
        let hi = eps * eps / 2.0 * clock;
        re += 1.5 * (theta * k as f64).cos() * (hi - lo);
        im += 1.5 * (theta * k as f64).sin() * (hi - lo);
        lo = hi;
    }
    assert!((v.cos_values[0] - 2.0 / eps * re).abs() < 1e-14);
    assert!((v.sin_values[0] - 2.0 / eps * im).abs() < 1e-14);
}

/// `(2/ε) Σ_k e^{iθk} ∫_{seg k} f` with each segment integral from the
/// quadrature oracle and the phase built by repeated complex rotation.
fn complex_functional(kernel: &dyn Kernel, t: f64, end: f64, path: &PoissonPath, eps: f64, theta: f64) -> (f64, f64) {
    let (rot_re, rot_im) = (theta.cos(), theta.sin());
    let (mut ph_re, mut ph_im) = (1.0, 0.0);
    let (mut re, mut im) = (0.0, 0.0);
    let kinks: Vec<f64> = kernel.breakpoints(t, end).iter().map(|b| b.at).collect();
    for seg in path.segments(eps, end).unwrap() {
        let inside: Vec<f64> = kinks.iter().copied().filter(|k| *k > seg.lo && *k < seg.hi).collect();
        let q = integrate(
            |a| if a.right == t { kernel.eval_before(t, a.from_right) } else { kernel.eval(t, a.x) },
            seg.lo,
            seg.hi,
            1e-13,
            &inside,
        );
        re += ph_re * q.value;
        im += ph_im * q.value;
        (ph_re, ph_im) = (ph_re * rot_re - ph_im * rot_im, ph_re * rot_im + ph_im * rot_re);
    }
    (2.0 / eps * re, 2.0 / eps * im)
}

#[test]
fn channels_are_projections_of_one_complex_integral() {
    let mut u = Uniform::new(8);
    let (knots, values) = random_table(&mut u);
    let spec = KernelSpec::tabulated(knots, values);
    let kernel = spec.build().unwrap();
    let eps = 0.4;
    let path = PoissonPath::simulate(2.0 / (eps * eps), 17, 2).unwrap();
    let v = transform(&spec, &[1.0], &path, &params(eps, 2.2)).unwrap();
    let (re, im) = complex_functional(kernel.as_ref(), 1.0, 1.0, &path, eps, 2.2);
    assert!((v.cos_values[0] - re).abs() < 1e-12, "{} vs {re}", v.cos_values[0]);
    assert!((v.sin_values[0] - im).abs() < 1e-12, "{} vs {im}", v.sin_values[0]);

    // the fbm kernel goes through tables built to quad_tol
    let fbm = FbmVolterra::new(1.4).unwrap();
    let v = transform(&KernelSpec::fbm(1.4), &[1.0], &path, &params(eps, 2.2)).unwrap();
    let (re, im) = complex_functional(&fbm, 1.0, 1.0, &path, eps, 2.2);
    assert!((v.cos_values[0] - re).abs() < 1e-7 && (v.sin_values[0] - im).abs() < 1e-7);
}

#[test]
fn second_and_fourth_moment_bounds() {
    for (h, theta) in [(0.75, PI / 2.0), (1.3, 2.0 * PI / 3.0), (0.4, 1.0)] {
        let cfg = EnsembleConfig::new(Mode::DualChannel, KernelSpec::fbm(h), vec![1.0], params(0.1, theta), 10_000, 31);
        let stats = run(&cfg).unwrap();
        let k = 4.0 / (1.0 - theta.cos());
        // ‖K^H(1, ·)‖² = 1
        for s in &stats.series {
            assert!(s.m2[0] <= k + 4.0 * s.se_m2[0], "H={h} {}: {}", s.label, s.m2[0]);
            assert!(s.m4[0] <= 3.0 * k * k + 4.0 * s.se_m4[0], "H={h} {}: {}", s.label, s.m4[0]);
        }
    }
}

#[test]
fn increments_scale_with_the_kernel_regularity() {
    let h = 0.75;
    let eps = 0.2;
    let alpha = f64::min((h + 1.0) / 2.0, 1.0);
    let gaps: Vec<f64> = (8..=16).map(|k| 2f64.powi(-k)).collect();
    let mut grid: Vec<f64> = gaps.iter().map(|g| 1.0 - g).collect();
    grid.push(1.0);
    grid.sort_by(f64::total_cmp);
    let prepared = PreparedTransform::new(&KernelSpec::fbm(h), &grid, &params(eps, PI / 2.0)).unwrap();
    let replicas = 200;
    let mut mean_abs = vec![0.0; gaps.len()];
    let mut worst_ratio: f64 = 0.0;
    for r in 0..replicas {
        let v = prepared.apply_stream(77, r).unwrap();
        let top = *v.cos_values.last().unwrap();
        for (i, g) in gaps.iter().enumerate() {
            let j = grid.iter().position(|t| *t == 1.0 - g).unwrap();
            let inc = (top - v.cos_values[j]).abs();
            mean_abs[i] += inc / replicas as f64;
            worst_ratio = worst_ratio.max(inc / g.powf(alpha));
        }
    }
    // least-squares slope of log mean |increment| against log gap
    let xs: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let ys: Vec<f64> = mean_abs.iter().map(|m| m.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / xs.len() as f64, ys.iter().sum::<f64>() / ys.len() as f64);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!(slope >= alpha - 0.1, "slope {slope}");
    assert!(worst_ratio.is_finite() && worst_ratio < 1e3, "ratio {worst_ratio}");
}
