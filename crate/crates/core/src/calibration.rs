//! Drive frequency of the rotating (process II) drive that cancels the
//! dynamic phase over one period.
//!
//! Along the cyclic solution n(χ₀, −ωt) one has B·n = E_J/sinχ₀ + ω cosχ₀,
//! so the dynamic phase per period is
//! ½∮E_J dt / sinχ₀ + π cosχ₀ sgn ω, and ∮E_J dt = 4K(m)/|ω| with
//! m = −4E₁E₂/(E₁−E₂)² (energies in units of E₁+E₂).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::dynamics::{evolve_state, IntegratorConfig};
use crate::elliptic::elliptic_k;
use crate::error::{Error, Result};
use crate::io::Report;
use crate::phases::dynamic_phase;
use crate::qubit::{DeviceParams, SpinState};
use crate::schedule::{process_ii, ProcessIIParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationMethod {
    Analytic,
    Numeric,
}

impl fmt::Display for CalibrationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CalibrationMethod::Analytic => "analytic",
            CalibrationMethod::Numeric => "numeric",
        })
    }
}

impl FromStr for CalibrationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(CalibrationMethod::Analytic),
            "numeric" => Ok(CalibrationMethod::Numeric),
            other => Err(Error::InvalidParameter(format!(
                "unknown calibration method `{other}` (expected analytic or numeric)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    /// Signed drive frequency, 1/τ₀.
    pub omega: f64,
    /// 2π/|ω|, τ₀.
    pub tau: f64,
    pub chi0: f64,
    /// Geometric phase of the cyclic state n(χ₀, 0): sgn(ω)·π(1 − cosχ₀).
    pub gamma_target: f64,
    /// Dynamic phase left over one period minus 2π·winding.
    pub residual_dynamic_phase: f64,
    /// Number of full turns of dynamic phase allowed per period.
    pub winding: u32,
    pub method: CalibrationMethod,
}

impl CalibrationResult {
    pub fn report(&self, params: &DeviceParams) -> Report {
        let tau0 = params.tau0_ns();
        Report::new()
            .number("chi0", self.chi0)
            .number("omega", self.omega)
            .number("tau_over_tau0", self.tau)
            .number("residual", self.residual_dynamic_phase)
            .text("method", self.method)
            .number("gamma", self.gamma_target)
            .text("winding", self.winding)
            .number("omega_per_ns", self.omega / tau0)
            .number("tau_ns", self.tau * tau0)
    }
}

/// χ₀ = acos(1 − γ/π) for γ ∈ [0, 2π].
pub fn gamma_to_chi0(gamma: f64) -> Result<f64> {
    if !(0.0..=2.0 * PI).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in [0, 2pi], got {gamma}"
        )));
    }
    Ok((1.0 - gamma / PI).clamp(-1.0, 1.0).acos())
}

/// The elliptic parameter −4E₁E₂/(E₁−E₂)².
pub fn elliptic_parameter(params: &DeviceParams) -> Result<f64> {
    if params.is_symmetric() {
        return Err(Error::InvalidParameter(
            "symmetric junctions (E1 = E2) make the elliptic parameter diverge".into(),
        ));
    }
    let d = params.e1 - params.e2;
    Ok(-4.0 * params.e1 * params.e2 / (d * d))
}

/// ∫ E_J dt over one period of the rotating drive, 4K(m)/|ω| in reduced units.
pub fn josephson_period_integral(params: &DeviceParams, omega: f64) -> Result<f64> {
    check_omega(omega)?;
    Ok(4.0 * elliptic_k(elliptic_parameter(params)?)? / omega.abs())
}

/// Closed-form dynamic phase of the cyclic state over one period.
pub fn dynamic_phase_closed_form(params: &DeviceParams, chi0: f64, omega: f64) -> Result<f64> {
    check_chi0(chi0)?;
    let j = josephson_period_integral(params, omega)?;
    Ok(0.5 * j / chi0.sin() + PI * chi0.cos() * omega.signum())
}

fn check_omega(omega: f64) -> Result<()> {
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "omega must be finite and nonzero, got {omega}"
        )));
    }
    Ok(())
}

fn check_chi0(chi0: f64) -> Result<()> {
    if !(chi0 > 0.0 && chi0 < PI) {
        return Err(Error::InvalidParameter(format!("chi0 must lie in (0, pi), got {chi0}")));
    }
    Ok(())
}

fn result(chi0: f64, omega: f64, residual: f64, winding: u32, method: CalibrationMethod) -> CalibrationResult {
    CalibrationResult {
        omega,
        tau: 2.0 * PI / omega.abs(),
        chi0,
        gamma_target: omega.signum() * PI * (1.0 - chi0.cos()),
        residual_dynamic_phase: residual,
        winding,
        method,
    }
}

/// ω = −4K(m)/(π sin2χ₀), the frequency with zero dynamic phase per period.
pub fn omega_zero_dynamic(params: &DeviceParams, chi0: f64) -> Result<CalibrationResult> {
    check_chi0(chi0)?;
    let s2 = (2.0 * chi0).sin();
    if s2.abs() < 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "sin(2 chi0) vanishes at chi0 = {chi0}; no zero-dynamic-phase frequency"
        )));
    }
    let k = elliptic_k(elliptic_parameter(params)?)?;
    let omega = -4.0 * k / (PI * s2);
    let residual = dynamic_phase_closed_form(params, chi0, omega)?;
    Ok(result(chi0, omega, residual, 0, CalibrationMethod::Analytic))
}

/// Frequency whose dynamic phase per period is 2π·winding, for the given
/// sense of rotation. `winding = 0` with the natural sign reproduces
/// [`omega_zero_dynamic`].
pub fn omega_with_winding(params: &DeviceParams, chi0: f64, winding: u32, positive: bool) -> Result<CalibrationResult> {
    check_chi0(chi0)?;
    let sign = if positive { 1.0 } else { -1.0 };
    // 2K/(|ω| sinχ₀) = π(2N − sgn(ω) cosχ₀)
    let rhs = PI * (2.0 * winding as f64 - sign * chi0.cos());
    if rhs <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "no frequency of this sign gives dynamic phase 2pi*{winding} at chi0 = {chi0}"
        )));
    }
    let k = elliptic_k(elliptic_parameter(params)?)?;
    let omega = sign * 2.0 * k / (chi0.sin() * rhs);
    let residual = dynamic_phase_closed_form(params, chi0, omega)? - 2.0 * PI * winding as f64;
    Ok(result(chi0, omega, residual, winding, CalibrationMethod::Analytic))
}

/// Search interval used by [`numeric_zero_dynamic`] when none is given:
/// |ω| ∈ [0.05, 50] with the sign that can cancel the dynamic phase.
pub fn default_bracket(chi0: f64) -> (f64, f64) {
    if (2.0 * chi0).sin() > 0.0 {
        (-50.0, -0.05)
    } else {
        (0.05, 50.0)
    }
}

/// Target accuracy of the numeric root, radians of dynamic phase.
pub const NUMERIC_PHASE_TOL: f64 = 1e-8;

/// Simulated dynamic phase over one period of the cyclic state.
pub fn simulated_dynamic_phase(params: &DeviceParams, chi0: f64, omega: f64, cfg: &IntegratorConfig) -> Result<f64> {
    let sched = process_ii(params, ProcessIIParams { chi0, omega })?;
    let traj = evolve_state(params, &sched, SpinState::from_angles(chi0, 0.0), cfg)?;
    Ok(dynamic_phase(&traj))
}

/// Finds ω inside `bracket` where the simulated dynamic phase vanishes.
pub fn numeric_zero_dynamic(
    params: &DeviceParams,
    chi0: f64,
    bracket: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<CalibrationResult> {
    check_chi0(chi0)?;
    let (lo, hi) = bracket;
    if lo == hi || lo.signum() != hi.signum() || lo == 0.0 || hi == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bracket [{lo}, {hi}] must be a nonempty interval excluding omega = 0"
        )));
    }
    let (omega, residual) = brent(
        |w| simulated_dynamic_phase(params, chi0, w, cfg),
        lo.min(hi),
        lo.max(hi),
        NUMERIC_PHASE_TOL,
    )?;
    Ok(result(chi0, omega, residual, 0, CalibrationMethod::Numeric))
}

const MAX_ITERATIONS: usize = 200;

/// Brent's bracketed root finder (bisection with secant and inverse
/// quadratic steps). Returns the root and the objective there.
pub fn brent<F>(mut f: F, lo: f64, hi: f64, ftol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok((a, fa));
    }
    if fb == 0.0 {
        return Ok((b, fb));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITERATIONS {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let xtol = 2.0 * f64::EPSILON * b.abs() + 0.5e-14;
        let m = 0.5 * (c - b);
        if fb.abs() <= ftol || m.abs() <= xtol {
            return Ok((b, fb));
        }
        if e.abs() >= xtol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (xtol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > xtol { d } else { xtol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Drive, ScheduledDrive};
    use crate::quadrature::integrate_smooth;
    use crate::schedule::Schedule;

    fn device() -> DeviceParams {
        DeviceParams::reference()
    }

    #[test]
    fn gamma_inversion() {
        assert!((gamma_to_chi0(PI).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((gamma_to_chi0(1.5 * PI).unwrap() - 2.0 * PI / 3.0).abs() < 1e-15);
        assert_eq!(gamma_to_chi0(0.0).unwrap(), 0.0);
        assert!((gamma_to_chi0(2.0 * PI).unwrap() - PI).abs() < 1e-15);
        assert!(gamma_to_chi0(-0.1).is_err());
        assert!(gamma_to_chi0(7.0).is_err());
    }

    #[test]
    fn josephson_integral_matches_quadrature() {
        let p = device();
        for omega in [0.3, -1.7, 4.0] {
            let s: Schedule = process_ii(&p, ProcessIIParams { chi0: 1.0, omega }).unwrap();
            let drive = ScheduledDrive::new(&p, &s);
            let q = integrate_smooth(|t| Ok(drive.field(t).transverse()), 0.0, s.duration(), 1e-14).unwrap();
            let closed = josephson_period_integral(&p, omega).unwrap();
            assert!((q - closed).abs() < 1e-9 * closed, "{q} vs {closed}");
        }
    }

    #[test]
    fn spin_flip_point() {
        let r = omega_zero_dynamic(&device(), (-0.5f64).acos()).unwrap();
        assert!(r.omega > 0.0);
        assert!((r.omega - 1.760_1).abs() < 1e-4, "{}", r.omega);
        assert!((r.tau - 3.57).abs() / 3.57 < 0.02);
        assert!((r.gamma_target - 1.5 * PI).abs() < 1e-12);
        assert!(r.residual_dynamic_phase.abs() < 1e-12);
    }

    #[test]
    fn mirror_symmetry() {
        let p = device();
        for chi0 in [0.3, 1.0, 1.4] {
            let a = omega_zero_dynamic(&p, chi0).unwrap();
            let b = omega_zero_dynamic(&p, PI - chi0).unwrap();
            assert!((a.omega + b.omega).abs() < 1e-12 * a.omega.abs());
            assert!((a.tau - b.tau).abs() < 1e-12 * a.tau);
        }
    }

    #[test]
    fn singular_points_rejected() {
        let p = device();
        for chi0 in [0.0, PI / 2.0, PI] {
            assert!(omega_zero_dynamic(&p, chi0).is_err(), "{chi0}");
        }
        let sym = DeviceParams::new(2.0, 2.0, 20.0).unwrap();
        assert!(omega_zero_dynamic(&sym, 1.0).is_err());
    }

    #[test]
    fn winding_variants() {
        let p = device();
        let chi0 = (0.75f64).acos();
        let zero = omega_with_winding(&p, chi0, 0, false).unwrap();
        let direct = omega_zero_dynamic(&p, chi0).unwrap();
        assert!((zero.omega - direct.omega).abs() < 1e-12);
        assert!(omega_with_winding(&p, chi0, 0, true).is_err());
        for positive in [true, false] {
            let r = omega_with_winding(&p, chi0, 1, positive).unwrap();
            let d = dynamic_phase_closed_form(&p, chi0, r.omega).unwrap();
            assert!((d - 2.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn numeric_agrees_with_closed_form() {
        let p = device();
        let cfg = IntegratorConfig::default();
        for chi0 in [2.0 * PI / 3.0, (0.75f64).acos(), PI / 3.0] {
            let a = omega_zero_dynamic(&p, chi0).unwrap();
            let n = numeric_zero_dynamic(&p, chi0, default_bracket(chi0), &cfg).unwrap();
            assert!(
                (a.omega - n.omega).abs() < 1e-6 * a.omega.abs(),
                "{chi0}: {} vs {}",
                a.omega,
                n.omega
            );
            assert!(n.residual_dynamic_phase.abs() < NUMERIC_PHASE_TOL);
        }
    }

    #[test]
    fn simulated_dynamic_phase_matches_closed_form() {
        let p = device();
        let cfg = IntegratorConfig::default();
        for (chi0, omega) in [(0.7, 1.1), (2.4, -0.6)] {
            let sim = simulated_dynamic_phase(&p, chi0, omega, &cfg).unwrap();
            let closed = dynamic_phase_closed_form(&p, chi0, omega).unwrap();
            assert!((sim - closed).abs() < 1e-8, "{sim} vs {closed}");
        }
    }

    #[test]
    fn nearly_symmetric_device() {
        let p = DeviceParams::new(3.9, 4.0, 40.0).unwrap();
        let chi0 = 2.0;
        let a = omega_zero_dynamic(&p, chi0).unwrap();
        let n = numeric_zero_dynamic(
            &p,
            chi0,
            default_bracket(chi0),
            &IntegratorConfig::default().with_samples(16385),
        )
        .unwrap();
        assert!(
            (a.omega - n.omega).abs() < 1e-5 * a.omega.abs(),
            "{} vs {}",
            a.omega,
            n.omega
        );
    }

    #[test]
    fn bracket_without_root() {
        let p = device();
        let chi0 = 2.0 * PI / 3.0;
        let e = numeric_zero_dynamic(&p, chi0, (-3.0, -1.0), &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(e, Error::NoSignChange { .. }));
        assert!(numeric_zero_dynamic(&p, chi0, (-1.0, 1.0), &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn brent_on_known_roots() {
        let (x, _) = brent(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-15).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-13);
        let (x, _) = brent(|x: f64| Ok(x.cos() - x), 0.0, 1.0, 0.0).unwrap();
        assert!((x - 0.739_085_133_215_160_6).abs() < 1e-13);
    }

    #[test]
    fn report_echoes_physical_units() {
        let p = device();
        let r = omega_zero_dynamic(&p, 2.0 * PI / 3.0).unwrap();
        let text = r.report(&p).render();
        assert!(text.starts_with("chi0=2.09439510239\nomega=1.760"));
        assert!(text.contains("method=analytic\n"));
        assert!(text.contains("tau_ns=0.30"));
    }
}
