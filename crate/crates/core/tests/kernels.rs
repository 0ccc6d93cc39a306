use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use kacstroock::kernels::{
    covariance_registry, d_h, decomposition_constant, fbm_kernel, lei_nualart_kernel, Covariance, FbmCov, LeiNualartCov,
    Regime, SubFbmCov,
};
use kacstroock::special::gamma;
use kacstroock::Error;

/// Γ(x) at 40 significant digits (mpmath), rounded to 20.
const GAMMA_TABLE: [(f64, f64); 20] = [
    (0.05, 19.470085311255512864),
    (0.1, 9.5135076986687318363),
    (0.25, 3.6256099082219083119),
    (0.5, 1.7724538509055160273),
    (0.75, 1.2254167024651776451),
    (1.0, 1.0),
    (1.25, 0.90640247705547707798),
    (1.5, 0.88622692545275801365),
    (1.75, 0.91906252684888323385),
    (2.0, 1.0),
    (2.5, 1.3293403881791370205),
    (3.3, 2.6834373819557687936),
    (4.75, 16.586206539225939611),
    (7.1, 868.95685880064040629),
    (10.0, 362880.0),
    (15.5, 334838609873.55645697),
    (-0.5, -3.5449077018110320546),
    (-1.5, 2.3632718012073547031),
    (-2.25, -1.7428148657282526509),
    (0.999, 1.000578205629358648),
];

struct Uniform(ChaCha8Rng);

impl Uniform {
    fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    fn next(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }
}

fn models(h: f64) -> Vec<Box<dyn Covariance>> {
    let mut out: Vec<Box<dyn Covariance>> = vec![Box::new(FbmCov::new(h).unwrap()), Box::new(SubFbmCov::new(h).unwrap())];
    if h != 1.0 {
        out.push(Box::new(LeiNualartCov::new(h).unwrap()));
    }
    out
}

#[test]
fn gamma_matches_high_precision_table() {
    for (x, want) in GAMMA_TABLE {
        let got = gamma(x);
        assert!(((got - want) / want).abs() < 1e-12, "Γ({x}) = {got}, want {want}");
    }
}

#[test]
fn pinned_constants() {
    assert!((d_h(0.5).unwrap() - 0.64599800374075196761).abs() < 1e-13);
    let c1 = decomposition_constant(0.5, Regime::SubFromFbm).unwrap();
    assert!((c1 - 0.37556277223247124143).abs() < 1e-13);
    let c2 = decomposition_constant(1.5, Regime::FbmFromSub).unwrap();
    assert!((c2 - 0.45996857917732664145).abs() < 1e-13);
    let ln = LeiNualartCov::new(1.5).unwrap().cov(1.0, 2.0);
    assert!((ln - 3.2323066284678391522).abs() < 1e-12);
}

#[test]
fn pointwise_kernel_examples() {
    assert_eq!(fbm_kernel(1.0, 2.0, 0.7).unwrap(), 1.0);
    assert_eq!(fbm_kernel(0.6, 1.0, 1.5).unwrap(), 0.0);
    assert!(matches!(fbm_kernel(0.6, 1.0, 1.0), Err(Error::SingularPoint(_))));
    assert_eq!(lei_nualart_kernel(0.7, 0.0, 3.0).unwrap(), 0.0);
    assert!((lei_nualart_kernel(1.0, 1.0, 1.0).unwrap() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    let tiny = lei_nualart_kernel(0.5, 2.0, 1e-12).unwrap();
    assert!(tiny.is_finite() && (tiny - 2.0 * 1e-3).abs() < 1e-9);
    assert!(lei_nualart_kernel(0.5, 1.0, -1.0).is_err());
}

#[test]
fn covariances_are_symmetric() {
    let mut u = Uniform::new(11);
    for h in [0.2, 0.5, 0.9, 1.0, 1.3, 1.8] {
        for model in models(h) {
            for _ in 0..50 {
                let (t, s) = (u.next(0.0, 3.0), u.next(0.0, 3.0));
                assert_eq!(model.cov(t, s), model.cov(s, t), "{} H={h}", model.name());
                assert!(model.variance(t) >= 0.0);
            }
        }
    }
}

#[test]
fn covariance_matrices_are_psd() {
    let mut u = Uniform::new(12);
    for h in [0.2, 0.5, 0.9, 1.0, 1.3, 1.8] {
        for model in models(h) {
            let grid: Vec<f64> = (0..6).map(|_| u.next(0.01, 2.0)).collect();
            let m = DMatrix::from_fn(6, 6, |i, j| model.cov(grid[i], grid[j]));
            let min = m.symmetric_eigenvalues().min();
            assert!(min >= -1e-10, "{} H={h}: min eigenvalue {min}", model.name());
        }
    }
}

#[test]
fn brownian_degeneration() {
    let f = FbmCov::new(1.0).unwrap();
    let s = SubFbmCov::new(1.0).unwrap();
    let mut u = Uniform::new(13);
    for _ in 0..50 {
        let (a, b) = (u.next(0.0, 5.0), u.next(0.0, 5.0));
        assert_eq!(f.cov(a, b), a.min(b));
        assert_eq!(s.cov(a, b), a.min(b));
        assert_eq!(fbm_kernel(1.0, a.max(b) + 0.1, a.min(b)).unwrap(), 1.0);
    }
    assert!(matches!(LeiNualartCov::new(1.0), Err(Error::UnsupportedParameter(_))));
}

#[test]
fn decomposition_identities() {
    let mut u = Uniform::new(14);
    for h in [0.2, 0.5, 0.8, 0.35, 0.95] {
        let c1 = decomposition_constant(h, Regime::SubFromFbm).unwrap();
        let (x, f, s) = (LeiNualartCov::new(h).unwrap(), FbmCov::new(h).unwrap(), SubFbmCov::new(h).unwrap());
        for _ in 0..50 {
            let (a, b) = (u.next(0.0, 2.0), u.next(0.0, 2.0));
            let gap = c1 * c1 * x.cov(a, b) + f.cov(a, b) - s.cov(a, b);
            assert!(gap.abs() < 1e-10, "H={h} ({a},{b}): {gap}");
        }
    }
    for h in [1.2, 1.5, 1.8, 1.05] {
        let c2 = decomposition_constant(h, Regime::FbmFromSub).unwrap();
        let (x, f, s) = (LeiNualartCov::new(h).unwrap(), FbmCov::new(h).unwrap(), SubFbmCov::new(h).unwrap());
        for _ in 0..50 {
            let (a, b) = (u.next(0.0, 2.0), u.next(0.0, 2.0));
            let gap = c2 * c2 * x.cov(a, b) + s.cov(a, b) - f.cov(a, b);
            assert!(gap.abs() < 1e-10, "H={h} ({a},{b}): {gap}");
        }
    }
}

#[test]
fn registry_lists_models() {
    let names: Vec<&str> = covariance_registry().names().collect();
    assert_eq!(names, vec!["fbm", "lei-nualart", "subfbm"]);
    assert!(matches!(
        covariance_registry().create("bifractional", &0.5),
        Err(Error::UnknownStrategy { .. })
    ));
}
