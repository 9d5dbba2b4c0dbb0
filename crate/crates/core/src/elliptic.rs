//! Complete elliptic integral of the first kind.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// K(m) = ∫₀^{π/2} dθ / √(1 − m sin²θ), parameter convention, m < 1.
///
/// Negative parameters are mapped into [0, 1) by K(−μ) = K(μ/(1+μ))/√(1+μ)
/// before the arithmetic-geometric mean is taken.
pub fn elliptic_k(m: f64) -> Result<f64> {
    if !m.is_finite() || m >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "elliptic parameter must be finite and < 1, got {m}"
        )));
    }
    if m < 0.0 {
        let mu = -m;
        return Ok(agm_k(mu / (1.0 + mu)) / (1.0 + mu).sqrt());
    }
    Ok(agm_k(m))
}

/// π / (2·AGM(1, √(1−m))) for 0 ≤ m < 1.
fn agm_k(m: f64) -> f64 {
    let (mut a, mut b) = (1.0f64, (1.0 - m).sqrt());
    for _ in 0..64 {
        if (a - b).abs() <= 4.0 * f64::EPSILON * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    FRAC_PI_2 / a
}
