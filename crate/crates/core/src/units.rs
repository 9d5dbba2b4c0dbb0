//! Physical constants and unit conversions.
//!
//! Library interfaces take energies in μeV and times in units of
//! τ₀ = ħ/(E₁+E₂). Internally energies are divided by E₁+E₂ so that ħ = 1
//! and the natural time unit is τ₀.

/// Reduced Planck constant in μeV·ns.
pub const HBAR_UEV_NS: f64 = 0.658_211_956_9;

/// Converts an energy scale in μeV to the corresponding time unit ħ/E in ns.
pub fn time_unit_ns(energy_uev: f64) -> f64 {
    HBAR_UEV_NS / energy_uev
}

/// Converts an energy scale in μeV to ħ/E in picoseconds.
pub fn time_unit_ps(energy_uev: f64) -> f64 {
    1.0e3 * time_unit_ns(energy_uev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_time_unit() {
        // (E1 + E2) = 1.5625 + 6.25 μeV
        let ps = time_unit_ps(7.8125);
        assert!((ps - 84.251_130_48).abs() < 1e-6, "{ps}");
    }
}
