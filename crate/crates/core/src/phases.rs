//! Total, dynamic and geometric phases of a trajectory, and the
//! adiabatic (Berry) phase from the solid angle swept by the field.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::dynamics::{cyclicity_check, Drive, ScheduledDrive, Trajectory};
use crate::error::{Error, Result};
use crate::io::Report;
use crate::quadrature::{integrate_smooth, simpson_uniform};
use crate::qubit::{BlochVector, DeviceParams, FieldVector};
use crate::schedule::Schedule;

/// Cyclicity tolerance required before a geometric phase is reported.
pub const CYCLIC_TOL: f64 = 1e-5;

/// Wraps an angle to (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

fn winding_of(raw: f64) -> i64 {
    ((raw - wrap_angle(raw)) / (2.0 * PI)).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMethod {
    OverlapMinusDynamic,
    LineIntegral,
}

impl fmt::Display for PhaseMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseMethod::OverlapMinusDynamic => "overlap-minus-dynamic",
            PhaseMethod::LineIntegral => "line-integral",
        })
    }
}

impl FromStr for PhaseMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overlap-minus-dynamic" => Ok(PhaseMethod::OverlapMinusDynamic),
            "line-integral" => Ok(PhaseMethod::LineIntegral),
            other => Err(Error::InvalidParameter(format!(
                "unknown phase method `{other}` (expected overlap-minus-dynamic or line-integral)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDecomposition {
    /// arg⟨ψ(0)|ψ(τ)⟩ in (−π, π].
    pub total: f64,
    /// −∫⟨H⟩dt, not wrapped.
    pub dynamic: f64,
    /// Wrapped to (−π, π].
    pub geometric: f64,
    /// Full turns removed when wrapping: raw = geometric + 2π·winding.
    pub winding: i64,
    pub method: PhaseMethod,
}

impl PhaseDecomposition {
    /// The unwrapped geometric phase.
    pub fn geometric_unwrapped(&self) -> f64 {
        self.geometric + 2.0 * PI * self.winding as f64
    }

    pub fn report(&self) -> Report {
        Report::new()
            .number("total", self.total)
            .number("dynamic", self.dynamic)
            .number("geometric", self.geometric)
            .text("winding", self.winding)
            .text("method", self.method)
    }
}

/// Overlaps below this are treated as orthogonal; well above integration noise.
const ORTHOGONAL_EPS: f64 = 1e-8;

/// arg⟨ψ(0)|ψ(τ)⟩.
pub fn total_phase(traj: &Trajectory) -> Result<f64> {
    let states = traj.states()?;
    let (first, last) = match (states.first(), states.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::InvalidParameter("empty trajectory".into())),
    };
    let overlap = first.inner(last);
    if overlap.norm() < ORTHOGONAL_EPS {
        return Err(Error::OrthogonalEndpoints);
    }
    Ok(overlap.arg())
}

/// Integrates samples taken at `times`: Simpson on a uniform grid,
/// trapezoid otherwise.
fn integrate_samples(times: &[f64], values: &[f64]) -> f64 {
    if times.len() < 2 {
        return 0.0;
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(f64::MIN_POSITIVE));
    if uniform {
        simpson_uniform(values, h)
    } else {
        times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// −∫⟨ψ|H|ψ⟩dt over the trajectory.
pub fn dynamic_phase(traj: &Trajectory) -> f64 {
    let neg: Vec<f64> = traj.hamiltonian_expectation.iter().map(|e| -e).collect();
    integrate_samples(&traj.times, &neg)
}

/// Geometric phase of a cyclic trajectory as total minus dynamic phase.
pub fn geometric_phase_cyclic(traj: &Trajectory) -> Result<PhaseDecomposition> {
    let check = cyclicity_check(traj, CYCLIC_TOL);
    if !check.cyclic {
        return Err(Error::NonCyclic {
            residual: check.residual,
            tol: CYCLIC_TOL,
        });
    }
    overlap_minus_dynamic(traj)
}

/// Total minus dynamic phase without the cyclicity requirement.
pub fn overlap_minus_dynamic(traj: &Trajectory) -> Result<PhaseDecomposition> {
    let total = total_phase(traj)?;
    let dynamic = dynamic_phase(traj);
    let raw = total - dynamic;
    Ok(PhaseDecomposition {
        total,
        dynamic,
        geometric: wrap_angle(raw),
        winding: winding_of(raw),
        method: PhaseMethod::OverlapMinusDynamic,
    })
}

/// Phase of a state that follows the aligned eigenstate: the total phase
/// minus the eigenvalue phase ∫|B|/2 dt, wrapped to (−π, π]. Tends to the
/// Berry phase −Ω/2 in the adiabatic limit; unlike total − dynamic it does
/// not pick up the small precession cones around B̂.
pub fn eigenstate_following_phase(traj: &Trajectory) -> Result<f64> {
    let total = total_phase(traj)?;
    let half_b: Vec<f64> = traj.fields.iter().map(|b| 0.5 * b.magnitude()).collect();
    Ok(wrap_angle(total - integrate_samples(&traj.times, &half_b)))
}

const POLE_EPS: f64 = 1e-9;

/// −½∫(1 − cosθ)dφ along the Bloch path plus the endpoint term
/// arg(cos(θᵢ/2)cos(θ_f/2) + sin(θᵢ/2)sin(θ_f/2)e^{i(φ_f−φᵢ)}).
///
/// The first term is evaluated in time, with dφ/dt·(1 − cosθ) rewritten
/// as (n×ṅ)_z/(1 + n_z) and ṅ = n×B taken from the recorded field, so the
/// integrand stays smooth through the north pole. Samples must be dense
/// enough that n advances less than a quarter turn about B between them.
pub fn pancharatnam_line_integral(traj: &Trajectory) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    let mut integrand = Vec::with_capacity(traj.len());
    for (k, ((&t, n), b)) in traj.times.iter().zip(&traj.bloch).zip(&traj.fields).enumerate() {
        if 1.0 + n.nz < POLE_EPS {
            return Err(Error::PathThroughSouthPole { t });
        }
        // n turns about B by h·|B| per sample; a quarter turn or more aliases the integrand
        if k + 1 < traj.len() {
            let step = (traj.times[k + 1] - t).abs() * b.magnitude();
            if step >= PI / 2.0 {
                return Err(Error::Undersampled { t, step });
            }
        }
        integrand.push(-0.5 * connection_rate(n, b));
    }
    let first = integrate_samples(&traj.times, &integrand);
    let (ni, nf) = (traj.bloch[0], traj.bloch[traj.len() - 1]);
    Ok(first + endpoint_term(&ni, &nf)?)
}

/// (1 − cosθ)·dφ/dt for n' = n×B.
fn connection_rate(n: &BlochVector, b: &FieldVector) -> f64 {
    let n_dot_b = n.nx * b.bx + n.ny * b.by + n.nz * b.bz;
    (n.nz * n_dot_b - b.bz) / (1.0 + n.nz)
}

fn endpoint_term(ni: &BlochVector, nf: &BlochVector) -> Result<f64> {
    let (si, ci) = (0.5 * ni.polar()).sin_cos();
    let (sf, cf) = (0.5 * nf.polar()).sin_cos();
    let dphi = nf.azimuth() - ni.azimuth();
    let re = ci * cf + si * sf * dphi.cos();
    let im = si * sf * dphi.sin();
    if re.hypot(im) < ORTHOGONAL_EPS {
        return Err(Error::OrthogonalEndpoints);
    }
    Ok(im.atan2(re))
}

/// Phase decomposition with the geometric part from the line integral.
pub fn line_integral_decomposition(traj: &Trajectory) -> Result<PhaseDecomposition> {
    let raw = pancharatnam_line_integral(traj)?;
    let total = total_phase(traj)?;
    Ok(PhaseDecomposition {
        total,
        dynamic: dynamic_phase(traj),
        geometric: wrap_angle(raw),
        winding: winding_of(raw),
        method: PhaseMethod::LineIntegral,
    })
}

/// Relative mismatch allowed between B(0) and B(τ) for a closed loop.
const CLOSURE_TOL: f64 = 1e-9;

/// Solid angle swept by the field direction over a closed schedule:
/// ∫(B_x Ḃ_y − B_y Ḃ_x) / (|B|(B_z + |B|)) dt.
pub fn solid_angle(params: &DeviceParams, sched: &Schedule, tol: f64) -> Result<f64> {
    solid_angle_with(&ScheduledDrive::new(params, sched), tol)
}

pub fn solid_angle_with(drive: &dyn Drive, tol: f64) -> Result<f64> {
    let tau = drive.duration();
    let (b0, b1) = (drive.field(0.0), drive.field(tau));
    let residual = (b0.bx - b1.bx).hypot(b0.by - b1.by).hypot(b0.bz - b1.bz);
    if residual > CLOSURE_TOL * b0.magnitude().max(1.0) {
        return Err(Error::NonCyclic {
            residual,
            tol: CLOSURE_TOL,
        });
    }
    let mut bounds = vec![0.0];
    bounds.extend(drive.breakpoints().into_iter().filter(|&b| b > 0.0 && b < tau));
    bounds.push(tau);
    let integrand = |t: f64| -> Result<f64> {
        let b = drive.field(t);
        let db = drive
            .field_rate(t)
            .ok_or_else(|| Error::InvalidParameter("drive has no analytic field rate".into()))?;
        solid_angle_integrand(t, &b, &db)
    };
    let mut total = 0.0;
    for w in bounds.windows(2) {
        // Gauss nodes are interior, so one-sided rates at kinks never enter
        total += integrate_smooth(integrand, w[0], w[1], tol)?;
    }
    Ok(total)
}

pub(crate) fn solid_angle_integrand(t: f64, b: &FieldVector, db: &FieldVector) -> Result<f64> {
    let m = b.magnitude();
    let denom = m * (b.bz + m);
    if m == 0.0 || b.bz + m <= 1e-12 * m {
        return Err(Error::SouthPole { t });
    }
    Ok((b.bx * db.by - b.by * db.bx) / denom)
}

/// Berry phase −Ω/2 of the eigenstate aligned with the field.
pub fn adiabatic_phase(params: &DeviceParams, sched: &Schedule) -> Result<f64> {
    Ok(-0.5 * solid_angle(params, sched, 1e-12)?)
}
