use crate::error::{Error, Result};
use crate::normal;

/// Bivariate Hüsler–Reiss distribution function with parameter Γ₁₂:
/// exp(−Φ(λ + (y₂−y₁)/(2λ))·e^{−y₁} − Φ(λ + (y₁−y₂)/(2λ))·e^{−y₂}), λ = √Γ₁₂ / 2.
///
/// Γ₁₂ = +∞ gives the independent product. Γ₁₂ ≤ 0 is rejected.
pub fn hr_bivariate_cdf(gamma12: f64, y1: f64, y2: f64) -> Result<f64> {
    hr_bivariate_cdf_with(gamma12, y1, y2, false)
}

/// As [`hr_bivariate_cdf`]; with `zero_limit` set, Γ₁₂ = 0 returns the
/// complete-dependence limit exp(−e^{−min(y₁, y₂)}).
pub fn hr_bivariate_cdf_with(gamma12: f64, y1: f64, y2: f64, zero_limit: bool) -> Result<f64> {
    if gamma12.is_nan() || y1.is_nan() || y2.is_nan() {
        return Err(Error::param("hr_bivariate_cdf got NaN input"));
    }
    if gamma12 <= 0.0 {
        return if zero_limit && gamma12 == 0.0 {
            Ok((-(-y1.min(y2)).exp()).exp())
        } else {
            Err(Error::param(format!("hr_bivariate_cdf needs gamma12 > 0, got {gamma12}")))
        };
    }
    if gamma12 == f64::INFINITY {
        return Ok((-(-y1).exp() - (-y2).exp()).exp());
    }
    let lam = 0.5 * gamma12.sqrt();
    let v = normal::cdf(lam + (y2 - y1) / (2.0 * lam)) * (-y1).exp()
        + normal::cdf(lam + (y1 - y2) / (2.0 * lam)) * (-y2).exp();
    Ok((-v).exp())
}
