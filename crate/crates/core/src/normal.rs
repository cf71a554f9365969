//! Standard normal CDF and per-dose toxicity probabilities.

use crate::error::{Error, Result};

/// `Φ(x) = erfc(-x / √2) / 2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Probability of toxicity at dose levels `1..=D` when individual MTDs are
/// `Normal(mean, sd)` on the dose-level scale: `p_d = Φ((d - mean) / sd)`.
pub fn tox_probabilities(doses: usize, mean: f64, sd: f64) -> Result<Vec<f64>> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::InvalidParameter(format!("MTD standard deviation must be positive, got {sd}")));
    }
    if !mean.is_finite() {
        return Err(Error::InvalidParameter(format!("MTD mean must be finite, got {mean}")));
    }
    Ok((1..=doses).map(|d| normal_cdf((d as f64 - mean) / sd)).collect())
}
