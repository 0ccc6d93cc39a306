//! The functionals
//!
//! ```text
//! Y_ε(t) = (2/ε) ∫ f(t, s) cos(θ N_{2s/ε²}) ds
//! Ỹ_ε(t) = (2/ε) ∫ f(t, s) sin(θ N_{2s/ε²}) ds
//! ```
//!
//! evaluated on one Poisson path. `N_{2s/ε²}` is constant between rescaled
//! jump times, so the oscillating factor is taken exactly per segment and
//! only `∫_seg f(t, s) ds` needs numerical work.

mod chebyshev;
mod integrator;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    decomposition_constant, validate_theta, FbmVolterra, Kernel, KernelSpec, LeiNualart, LeiNualartCov, Regime,
    Covariance, ThetaParam, DEFAULT_THETA_MARGIN,
};
use crate::poisson::{stream_segments, PathTag, PoissonPath, Segment};

pub use chebyshev::ChebCumulative;
pub use integrator::{
    integrator_registry, AdaptiveIntegrator, ChebyshevIntegrator, Cursor, SegmentIntegrator, SliceIntegral,
    SliceSettings,
};

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_NODES: usize = 20_000_000;
pub const DEFAULT_MAX_EVENTS: f64 = 1e9;

fn default_quad_tol() -> f64 {
    DEFAULT_QUAD_TOL
}

fn default_max_nodes() -> usize {
    DEFAULT_MAX_NODES
}

fn default_max_events() -> f64 {
    DEFAULT_MAX_EVENTS
}

fn default_integrator() -> String {
    ChebyshevIntegrator::NAME.to_string()
}

/// Parameters of one approximation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxParams {
    pub epsilon: f64,
    pub theta: ThetaParam,
    /// Cut-off of the s-axis. `None` integrates over the kernel's support,
    /// which must then be bounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_max_nodes")]
    pub max_nodes: usize,
    /// Refuse runs expecting more Poisson events than this per path.
    #[serde(default = "default_max_events")]
    pub max_events: f64,
    #[serde(default = "default_integrator")]
    pub integrator: String,
}

impl ApproxParams {
    pub fn new(epsilon: f64, theta: ThetaParam) -> Self {
        Self {
            epsilon,
            theta,
            truncation_radius: None,
            quad_tol: DEFAULT_QUAD_TOL,
            max_nodes: DEFAULT_MAX_NODES,
            max_events: DEFAULT_MAX_EVENTS,
            integrator: default_integrator(),
        }
    }

    pub fn with_truncation(mut self, radius: f64) -> Self {
        self.truncation_radius = Some(radius);
        self
    }

    pub fn with_integrator(mut self, name: &str) -> Self {
        self.integrator = name.to_string();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::invalid(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if let Some(r) = self.truncation_radius {
            if !r.is_finite() || r <= 0.0 {
                return Err(Error::invalid(format!("truncation radius must be positive, got {r}")));
            }
        }
        if !(self.quad_tol > 0.0 && self.quad_tol <= 1e-2) {
            return Err(Error::invalid(format!("quad_tol must lie in (0, 1e-2], got {}", self.quad_tol)));
        }
        if self.max_nodes == 0 {
            return Err(Error::invalid("max_nodes must be positive"));
        }
        if !(self.max_events > 0.0) {
            return Err(Error::invalid(format!("max_events must be positive, got {}", self.max_events)));
        }
        if !integrator_registry().contains(&self.integrator) {
            return Err(Error::UnknownStrategy {
                kind: "integrator",
                name: self.integrator.clone(),
                known: integrator_registry().names().collect::<Vec<_>>().join(", "),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Cos,
    Sin,
}

impl Channel {
    pub fn other(self) -> Self {
        match self {
            Channel::Cos => Channel::Sin,
            Channel::Sin => Channel::Cos,
        }
    }
}

/// Both channels of one kernel on one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathValues {
    pub kernel: KernelSpec,
    pub grid: Vec<f64>,
    pub cos_values: Vec<f64>,
    pub sin_values: Vec<f64>,
    pub params: ApproxParams,
    pub path_tag: PathTag,
}

impl PathValues {
    pub fn values(&self, channel: Channel) -> &[f64] {
        match channel {
            Channel::Cos => &self.cos_values,
            Channel::Sin => &self.sin_values,
        }
    }

    pub fn channel(&self, channel: Channel) -> ChannelValues<'_> {
        ChannelValues { source: self, channel }
    }
}

/// One channel of a [`PathValues`], keeping its provenance.
#[derive(Debug, Clone, Copy)]
pub struct ChannelValues<'a> {
    pub source: &'a PathValues,
    pub channel: Channel,
}

impl ChannelValues<'_> {
    pub fn values(&self) -> &[f64] {
        self.source.values(self.channel)
    }
}

/// A kernel bound to a time grid and parameters, with every `f(t_j, ·)`
/// prepared for segment integration. Apply it to as many paths as needed.
pub struct PreparedTransform {
    kernel: Arc<dyn Kernel>,
    grid: Vec<f64>,
    slices: Vec<Box<dyn SliceIntegral>>,
    params: ApproxParams,
    s_max: f64,
}

impl std::fmt::Debug for PreparedTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PreparedTransform")
            .field("kernel", &self.kernel)
            .field("grid", &self.grid)
            .field("params", &self.params)
            .field("s_max", &self.s_max)
            .finish()
    }
}

impl PreparedTransform {
    pub fn new(spec: &KernelSpec, grid: &[f64], params: &ApproxParams) -> Result<Self> {
        Self::with_kernel(Arc::from(spec.build()?), grid, params)
    }

    pub fn with_kernel(kernel: Arc<dyn Kernel>, grid: &[f64], params: &ApproxParams) -> Result<Self> {
        params.validate()?;
        check_grid(grid)?;
        if let Some(h) = kernel.hurst() {
            let report = validate_theta(params.theta.value(), h, DEFAULT_THETA_MARGIN);
            if !report.admissible {
                return Err(Error::invalid(format!(
                    "theta {} is not admissible for H = {h} (cos((2i+1)θ) = 1 for i in {:?})",
                    params.theta.value(),
                    report.violated
                )));
            }
        }
        let mut ends = Vec::with_capacity(grid.len());
        for &t in grid {
            let end = match (kernel.support_end(t), params.truncation_radius) {
                (Some(e), Some(r)) if r < e => {
                    return Err(Error::invalid(format!(
                        "truncation radius {r} cuts into the support [0, {e}] of kernel '{}'",
                        kernel.name()
                    )))
                }
                (Some(e), _) => e,
                (None, Some(r)) => r,
                (None, None) => {
                    return Err(Error::invalid(format!(
                        "kernel '{}' has unbounded support; a truncation radius is required",
                        kernel.name()
                    )))
                }
            };
            ends.push(end.max(0.0));
        }
        let s_max = ends.iter().copied().fold(0.0, f64::max);
        let expected_events = 2.0 * s_max / (params.epsilon * params.epsilon);
        if expected_events > params.max_events {
            return Err(Error::HorizonGuard {
                expected_events,
                limit: params.max_events,
            });
        }
        let integrator = integrator_registry().create(&params.integrator, &())?;
        let settings = SliceSettings {
            quad_tol: params.quad_tol,
            max_nodes: params.max_nodes,
        };
        let slices = grid
            .iter()
            .zip(&ends)
            .map(|(&t, &end)| integrator.prepare(&kernel, t, end, settings))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kernel,
            grid: grid.to_vec(),
            slices,
            params: params.clone(),
            s_max,
        })
    }

    pub fn kernel(&self) -> &dyn Kernel {
        self.kernel.as_ref()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn params(&self) -> &ApproxParams {
        &self.params
    }

    /// Largest s reached by any grid point.
    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    /// Path horizon (internal clock) the transform needs: `2 s_max / ε²`.
    pub fn required_horizon(&self) -> f64 {
        2.0 * self.s_max / (self.params.epsilon * self.params.epsilon)
    }

    pub fn apply_path(&self, path: &PoissonPath) -> Result<PathValues> {
        if self.s_max == 0.0 {
            return Ok(self.finish(vec![0.0; self.grid.len()], vec![0.0; self.grid.len()], path.tag()));
        }
        let segments = path.segments(self.params.epsilon, self.s_max)?;
        self.apply_segments(segments, path.tag())
    }

    /// Streams the path from `(seed, stream)` without storing jump times.
    pub fn apply_stream(&self, seed: u64, stream: u64) -> Result<PathValues> {
        let tag = PathTag::Simulated { seed, stream };
        if self.s_max == 0.0 {
            return Ok(self.finish(vec![0.0; self.grid.len()], vec![0.0; self.grid.len()], tag));
        }
        self.apply_segments(stream_segments(seed, stream, self.params.epsilon, self.s_max)?, tag)
    }

    /// Accumulates both channels over an arbitrary segment sequence
    /// starting at `s = 0`.
    pub fn apply_segments<I: IntoIterator<Item = Segment>>(&self, segments: I, tag: PathTag) -> Result<PathValues> {
        let n = self.grid.len();
        let mut cos_acc = vec![0.0; n];
        let mut sin_acc = vec![0.0; n];
        let mut cursors = vec![Cursor::default(); n];
        let ends: Vec<f64> = self.slices.iter().map(|s| s.end()).collect();
        let theta = self.params.theta.value();
        for seg in segments {
            if seg.lo >= self.s_max {
                break;
            }
            let (sin, cos) = (theta * seg.count as f64).sin_cos();
            for j in 0..n {
                let end = ends[j];
                if seg.lo >= end {
                    continue;
                }
                let piece = self.slices[j].integral(seg.lo, seg.hi.min(end), &mut cursors[j])?;
                cos_acc[j] += cos * piece;
                sin_acc[j] += sin * piece;
            }
        }
        let scale = 2.0 / self.params.epsilon;
        for v in cos_acc.iter_mut().chain(sin_acc.iter_mut()) {
            *v *= scale;
        }
        Ok(self.finish(cos_acc, sin_acc, tag))
    }

    fn finish(&self, cos_values: Vec<f64>, sin_values: Vec<f64>, path_tag: PathTag) -> PathValues {
        PathValues {
            kernel: self.kernel.spec(),
            grid: self.grid.clone(),
            cos_values,
            sin_values,
            params: self.params.clone(),
            path_tag,
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("time grid is empty"));
    }
    for w in grid.windows(2) {
        if w[1] < w[0] {
            return Err(Error::invalid("time grid must be sorted in increasing order"));
        }
    }
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid("grid times must be finite and non-negative"));
    }
    Ok(())
}

/// Both channels of `kernel` on `path`.
pub fn transform(kernel: &KernelSpec, grid: &[f64], path: &PoissonPath, params: &ApproxParams) -> Result<PathValues> {
    PreparedTransform::new(kernel, grid, params)?.apply_path(path)
}

/// Smallest radius `R` with `(4/(1−cos θ)) ∫_R^∞ f(T, s)² ds ≤ tail_tol²`,
/// using the kernel's tail bound. Kernels supported in `[0, T]` return the
/// support end.
pub fn truncation_radius_for(kernel: &dyn Kernel, theta: ThetaParam, tail_tol: f64, horizon_t: f64) -> Result<f64> {
    if !tail_tol.is_finite() || tail_tol <= 0.0 {
        return Err(Error::invalid(format!("tail_tol must be positive, got {tail_tol}")));
    }
    if !horizon_t.is_finite() || horizon_t <= 0.0 {
        return Err(Error::invalid(format!("time horizon must be positive, got {horizon_t}")));
    }
    if let Some(end) = kernel.support_end(horizon_t) {
        return Ok(end);
    }
    let budget = tail_tol * tail_tol * theta.one_minus_cos() / 4.0;
    if kernel.name() == LeiNualart::NAME {
        // R^{-H}/H = budget
        let h = kernel.hurst().expect("Lei-Nualart kernel carries H");
        return Ok((1.0 / (h * budget)).powf(1.0 / h));
    }
    // generic: bisection in log R on the monotone tail bound
    let bound = |r: f64| kernel.tail_l2_bound(horizon_t, r);
    let (mut lo, mut hi) = (horizon_t.ln() - 1.0, horizon_t.ln() + 1.0);
    while bound(lo.exp()) <= budget && lo > -700.0 {
        lo -= 1.0;
    }
    while bound(hi.exp()) > budget {
        hi += 1.0;
        if hi > 700.0 {
            return Err(Error::invalid("kernel tail bound does not decay below the requested tolerance"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bound(mid.exp()) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi.exp())
}

/// Default tail tolerance for Lei–Nualart runs on `[0, T]`:
/// `0.05 · sqrt(cov_X(T, T))`.
pub fn default_tail_tol(hurst: f64, horizon_t: f64) -> Result<f64> {
    Ok(0.05 * LeiNualartCov::new(hurst)?.variance(horizon_t).sqrt())
}

/// `C₁ x + b` for `x` from the Lei–Nualart kernel and `b` from the fBm
/// kernel, on opposite channels of the same path.
pub fn subfbm_combine(x: ChannelValues<'_>, b: ChannelValues<'_>, hurst: f64) -> Result<Vec<f64>> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::invalid(format!("sub-fBm combination needs H in (0, 1), got {hurst}")));
    }
    let (xs, bs) = (x.source, b.source);
    if xs.path_tag != bs.path_tag {
        return Err(Error::InvalidCombination(format!(
            "values come from different paths ({:?} vs {:?})",
            xs.path_tag, bs.path_tag
        )));
    }
    if xs.grid != bs.grid {
        return Err(Error::InvalidCombination("time grids differ".into()));
    }
    if xs.params.epsilon != bs.params.epsilon || xs.params.theta != bs.params.theta {
        return Err(Error::InvalidCombination("epsilon or theta differ".into()));
    }
    if x.channel == b.channel {
        return Err(Error::InvalidCombination(format!(
            "both inputs use the {:?} channel; the limits are only independent on opposite channels",
            x.channel
        )));
    }
    if xs.kernel.kind != LeiNualart::NAME || bs.kernel.kind != FbmVolterra::NAME {
        return Err(Error::InvalidCombination(format!(
            "expected Lei-Nualart and fbm kernels, got '{}' and '{}'",
            xs.kernel.kind, bs.kernel.kind
        )));
    }
    if xs.kernel.hurst != Some(hurst) || bs.kernel.hurst != Some(hurst) {
        return Err(Error::InvalidCombination("kernels do not share the requested H".into()));
    }
    let c1 = decomposition_constant(hurst, Regime::SubFromFbm)?;
    Ok(x.values().iter().zip(b.values()).map(|(xv, bv)| c1 * xv + bv).collect())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn theta(v: f64) -> ThetaParam {
        ThetaParam::new(v).unwrap()
    }

    #[test]
    fn zero_kernel_gives_zero() {
        let spec = KernelSpec::tabulated(vec![0.0, 1.0], vec![0.0, 0.0]);
        let path = PoissonPath::simulate(100.0, 1, 0).unwrap();
        let v = transform(&spec, &[0.5, 1.0], &path, &ApproxParams::new(0.2, theta(1.0))).unwrap();
        assert!(v.cos_values.iter().chain(&v.sin_values).all(|x| *x == 0.0));
    }

    #[test]
    fn empty_path() {
        let spec = KernelSpec::tabulated(vec![0.0, 1.0], vec![1.0, 1.0]);
        let path = PoissonPath::from_interarrivals(&[], 2.0).unwrap();
        let v = transform(&spec, &[1.0], &path, &ApproxParams::new(1.0, theta(0.7))).unwrap();
        assert_eq!(v.cos_values, vec![2.0]);
        assert_eq!(v.sin_values, vec![0.0]);
    }

    #[test]
    fn injected_jumps_cancel() {
        let spec = KernelSpec::tabulated(vec![0.0, 1.0], vec![1.0, 1.0]);
        let path = PoissonPath::from_interarrivals(&[0.4, 0.6, 0.4], 2.0).unwrap();
        let v = transform(&spec, &[1.0], &path, &ApproxParams::new(1.0, theta(PI / 2.0))).unwrap();
        assert!(v.cos_values[0].abs() < 1e-15);
        assert!(v.sin_values[0].abs() < 1e-15);
    }

    #[test]
    fn horizon_too_short() {
        let spec = KernelSpec::tabulated(vec![0.0, 1.0], vec![1.0, 1.0]);
        let path = PoissonPath::from_interarrivals(&[0.4], 1.0).unwrap();
        let err = transform(&spec, &[1.0], &path, &ApproxParams::new(1.0, theta(1.0))).unwrap_err();
        assert!(matches!(err, Error::OutOfHorizon { .. }));
    }

    #[test]
    fn horizon_guard() {
        let spec = KernelSpec::fbm(0.75);
        let mut params = ApproxParams::new(1e-5, theta(1.0));
        params.max_events = 1e9;
        let err = PreparedTransform::new(&spec, &[1.0], &params).unwrap_err();
        assert!(matches!(err, Error::HorizonGuard { .. }));
    }

    #[test]
    fn unbounded_kernel_needs_radius() {
        let err = PreparedTransform::new(&KernelSpec::lei_nualart(0.8), &[1.0], &ApproxParams::new(0.5, theta(1.0)));
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn inadmissible_theta_rejected() {
        let params = ApproxParams::new(0.5, theta(2.0 * PI / 3.0));
        assert!(PreparedTransform::new(&KernelSpec::fbm(0.3), &[1.0], &params).is_err());
        assert!(PreparedTransform::new(&KernelSpec::fbm(0.75), &[1.0], &params).is_ok());
    }

    #[test]
    fn truncation_radius_examples() {
        let th = theta(PI / 2.0);
        let ln1 = LeiNualart::new(1.0).unwrap();
        assert!((truncation_radius_for(&ln1, th, 0.01, 1.0).unwrap() - 4e4).abs() < 1e-6);
        let ln05 = LeiNualart::new(0.5).unwrap();
        assert!((truncation_radius_for(&ln05, th, 0.1, 1.0).unwrap() - 6.4e5).abs() < 1e-4);
        let fbm = FbmVolterra::new(0.7).unwrap();
        assert_eq!(truncation_radius_for(&fbm, th, 0.1, 2.5).unwrap(), 2.5);
        assert!(truncation_radius_for(&fbm, th, 0.0, 2.5).is_err());
    }

    #[test]
    fn integrators_agree() {
        let path = PoissonPath::simulate(400.0, 7, 3).unwrap();
        for spec in [KernelSpec::fbm(0.4), KernelSpec::fbm(1.3), KernelSpec::lei_nualart(0.7)] {
            let base = ApproxParams::new(0.3, theta(1.1)).with_truncation(12.0);
            let grid = [0.0, 0.3, 0.9];
            let a = transform(&spec, &grid, &path, &base).unwrap();
            let b = transform(&spec, &grid, &path, &base.clone().with_integrator(AdaptiveIntegrator::NAME)).unwrap();
            for (x, y) in a.cos_values.iter().chain(&a.sin_values).zip(b.cos_values.iter().chain(&b.sin_values)) {
                assert!((x - y).abs() < 1e-6 * (1.0 + y.abs()), "{}: {x} vs {y}", spec.kind);
            }
        }
    }

    #[test]
    fn combine_checks() {
        let h = 0.6;
        let params = ApproxParams::new(0.5, theta(PI / 2.0)).with_truncation(10.0);
        let grid = [0.0, 0.5, 1.0];
        let path = PoissonPath::simulate(100.0, 3, 1).unwrap();
        let x = transform(&KernelSpec::lei_nualart(h), &grid, &path, &params).unwrap();
        let b = transform(&KernelSpec::fbm(h), &grid, &path, &params).unwrap();
        let combined = subfbm_combine(x.channel(Channel::Cos), b.channel(Channel::Sin), h).unwrap();
        assert_eq!(combined[0], 0.0);
        let c1 = decomposition_constant(h, Regime::SubFromFbm).unwrap();
        assert!((combined[2] - (c1 * x.cos_values[2] + b.sin_values[2])).abs() < 1e-15);

        let same = subfbm_combine(x.channel(Channel::Cos), b.channel(Channel::Cos), h);
        assert!(matches!(same, Err(Error::InvalidCombination(_))));
        let other = PoissonPath::simulate(100.0, 4, 1).unwrap();
        let b2 = transform(&KernelSpec::fbm(h), &grid, &other, &params).unwrap();
        assert!(matches!(
            subfbm_combine(x.channel(Channel::Cos), b2.channel(Channel::Sin), h),
            Err(Error::InvalidCombination(_))
        ));
        assert!(matches!(
            subfbm_combine(x.channel(Channel::Cos), b.channel(Channel::Sin), 1.0),
            Err(Error::InvalidArgument(_))
        ));

        let mut zero = x.clone();
        zero.cos_values.iter_mut().for_each(|v| *v = 0.0);
        let only_b = subfbm_combine(zero.channel(Channel::Cos), b.channel(Channel::Sin), h).unwrap();
        assert_eq!(only_b, b.sin_values);
    }

    #[test]
    fn streamed_equals_materialized() {
        let params = ApproxParams::new(0.2, theta(2.0));
        let prepared = PreparedTransform::new(&KernelSpec::fbm(0.75), &[0.25, 0.5, 1.0], &params).unwrap();
        let path = PoissonPath::simulate(prepared.required_horizon() * 1.01, 11, 5).unwrap();
        assert_eq!(prepared.apply_path(&path).unwrap().cos_values, prepared.apply_stream(11, 5).unwrap().cos_values);
    }
}
