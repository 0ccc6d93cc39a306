use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_THETA_MARGIN: f64 = 1e-9;

/// Rotation angle `θ ∈ (0, π) ∪ (π, 2π)` of the approximating processes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ThetaParam(f64);

impl ThetaParam {
    pub fn new(theta: f64) -> Result<Self> {
        if in_range(theta, DEFAULT_THETA_MARGIN) {
            Ok(Self(theta))
        } else {
            Err(Error::invalid(format!("theta must lie in (0, pi) U (pi, 2pi), got {theta}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1 − cos θ`, the constant driving the moment bounds.
    pub fn one_minus_cos(self) -> f64 {
        1.0 - self.0.cos()
    }
}

impl TryFrom<f64> for ThetaParam {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ThetaParam> for f64 {
    fn from(t: ThetaParam) -> f64 {
        t.0
    }
}

fn in_range(theta: f64, margin: f64) -> bool {
    theta.is_finite() && theta > margin && theta < 2.0 * PI - margin && (theta - PI).abs() > margin
}

/// Outcome of [`validate_theta`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaReport {
    pub theta: f64,
    pub hurst: f64,
    pub in_range: bool,
    /// Indices `i` with `cos((2i+1)θ) = 1` within the margin.
    pub violated: Vec<u32>,
    pub admissible: bool,
}

/// Checks `θ` against the range condition and, for `H ≤ ½`, against
/// `cos((2i+1)θ) ≠ 1` for every `0 ≤ i ≤ ⌊⌊1/H⌋ / 2⌋`.
pub fn validate_theta(theta: f64, hurst: f64, margin: f64) -> ThetaReport {
    let in_range = in_range(theta, margin);
    let mut violated = Vec::new();
    if in_range && hurst > 0.0 && hurst <= 0.5 {
        let i_max = ((1.0 / hurst).floor() / 2.0).floor() as u32;
        for i in 0..=i_max {
            if ((2 * i + 1) as f64 * theta).cos() >= 1.0 - margin {
                violated.push(i);
            }
        }
    }
    ThetaReport {
        theta,
        hurst,
        in_range,
        admissible: in_range && violated.is_empty(),
        violated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_only_above_half() {
        let r = validate_theta(PI / 2.0, 0.75, DEFAULT_THETA_MARGIN);
        assert!(r.admissible && r.in_range && r.violated.is_empty());
    }

    #[test]
    fn two_thirds_pi_fails_for_small_h() {
        let r = validate_theta(2.0 * PI / 3.0, 0.3, DEFAULT_THETA_MARGIN);
        assert!(!r.admissible);
        assert_eq!(r.violated, vec![1]);
        assert!(validate_theta(2.0 * PI / 3.0, 0.75, DEFAULT_THETA_MARGIN).admissible);
    }

    #[test]
    fn excluded_angles() {
        for theta in [0.0, PI, 2.0 * PI, -1.0, 7.0, f64::NAN] {
            let r = validate_theta(theta, 0.8, DEFAULT_THETA_MARGIN);
            assert!(!r.in_range && !r.admissible, "{theta}");
        }
        assert!(ThetaParam::new(PI).is_err());
        assert!(ThetaParam::new(PI + 1e-6).is_ok());
    }

    #[test]
    fn theta_param_serde() {
        let t: ThetaParam = serde_json::from_str("1.5").unwrap();
        assert_eq!(t.value(), 1.5);
        assert!(serde_json::from_str::<ThetaParam>("3.141592653589793").is_err());
    }
}
