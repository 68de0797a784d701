//! Closed-form constants from the convergence analysis.

use crate::{Error, Result};

fn check_domain(delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be finite and nonnegative, got {delta}")));
    }
    Ok(())
}

/// `C_δ = (√(2(1−δ)) + √(1+δ)) / (√(1−δ)(√(1−δ²) − √(2δ²)))`, defined for `0 ≤ δ < 1/√3`.
pub fn htp_constant(delta: f64) -> Result<f64> {
    check_domain(delta)?;
    let d2 = delta * delta;
    let inner = 1.0 - d2;
    if !(inner > 0.0) {
        return Err(Error::DenominatorNonpositive(inner));
    }
    let den = (1.0 - delta).sqrt() * (inner.sqrt() - (2.0 * d2).sqrt());
    if !(den > 0.0) {
        return Err(Error::DenominatorNonpositive(den));
    }
    Ok(((2.0 * (1.0 - delta)).sqrt() + (1.0 + delta).sqrt()) / den)
}

/// `2δ·C_δ·√(1+δ)/√(1−δ)`: the per-step error contraction of the alternating scheme.
pub fn contraction_factor(delta: f64) -> Result<f64> {
    let c = htp_constant(delta)?;
    Ok(2.0 * delta * c * (1.0 + delta).sqrt() / (1.0 - delta).sqrt())
}
