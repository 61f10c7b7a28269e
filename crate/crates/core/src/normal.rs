//! Standard normal density, distribution function and upper quantiles.

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("probability must lie strictly inside (0, 1), got {0}")]
pub struct ProbabilityOutOfRange(pub f64);

pub fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Φ(x), evaluated through `erfc` so the lower tail keeps relative accuracy.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// 1 − Φ(x) without cancellation in the upper tail.
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// ∫_{-∞}^x Φ(t) dt = xΦ(x) + φ(x).
pub fn cdf_antiderivative(x: f64) -> f64 {
    x * cdf(x) + pdf(x)
}

/// Lower quantile Φ⁻¹(p).
pub fn quantile(p: f64) -> Result<f64, ProbabilityOutOfRange> {
    Ok(-normal_upper_quantile(p)?)
}

/// The z with 1 − Φ(z) = p.
///
/// Computed as −Φ⁻¹(p) so small upper-tail probabilities never pass through
/// `1 − p`, then polished against the `erfc`-based survival function.
pub fn normal_upper_quantile(p: f64) -> Result<f64, ProbabilityOutOfRange> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ProbabilityOutOfRange(p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let standard = Normal::new(0.0, 1.0).expect("unit normal parameters are valid");
    let z = -standard.inverse_cdf(p);
    // one Newton step on 1 - Φ(z) = p
    Ok(z + (sf(z) - p) / pdf(z))
}
