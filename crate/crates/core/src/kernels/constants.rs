use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma;

use super::check_hurst;

/// Normalizer of the fBm Volterra kernel,
/// `d^H = (H Γ((3−H)/2) / (Γ((H+1)/2) Γ(2−H)))^{1/2}`.
pub fn d_h(h: f64) -> Result<f64> {
    check_hurst(h)?;
    let num = h * gamma((3.0 - h) / 2.0);
    let den = gamma((h + 1.0) / 2.0) * gamma(2.0 - h);
    Ok((num / den).sqrt())
}

/// Which side of the sub-fBm/fBm decomposition a constant belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `H ∈ (0,1)`: sub-fBm has the law of `C₁ X^H + B^H`.
    SubFromFbm,
    /// `H ∈ (1,2)`: fBm has the law of `C₂ X^H + S^H`.
    FbmFromSub,
}

/// `C₁ = (H / (2Γ(1−H)))^{1/2}` or `C₂ = (H(H−1) / (2Γ(2−H)))^{1/2}`.
pub fn decomposition_constant(h: f64, regime: Regime) -> Result<f64> {
    match regime {
        Regime::SubFromFbm if h > 0.0 && h < 1.0 => Ok((h / (2.0 * gamma(1.0 - h))).sqrt()),
        Regime::FbmFromSub if h > 1.0 && h < 2.0 => Ok((h * (h - 1.0) / (2.0 * gamma(2.0 - h))).sqrt()),
        Regime::SubFromFbm => Err(Error::invalid(format!("C1 needs H in (0, 1), got {h}"))),
        Regime::FbmFromSub => Err(Error::invalid(format!("C2 needs H in (1, 2), got {h}"))),
    }
}
