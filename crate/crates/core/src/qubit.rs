//! Single charge-qubit model: device parameters, the fictitious field driven
//! by flux and gate charge, the spin-½ Hamiltonian, Bloch-sphere mapping and
//! the cyclic-basis decomposition of the prepared state.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units;

/// Josephson and charging energies of one asymmetric-SQUID charge qubit, in μeV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    pub e1: f64,
    pub e2: f64,
    pub ech: f64,
}

impl DeviceParams {
    pub fn new(e1: f64, e2: f64, ech: f64) -> Result<Self> {
        for (name, v) in [("e1", e1), ("e2", e2), ("ech", ech)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a positive finite energy, got {v}"
                )));
            }
        }
        if e1 == e2 {
            log::warn!("symmetric SQUID (e1 == e2 = {e1} μeV): E_J vanishes at half a flux quantum");
        }
        Ok(Self { e1, e2, ech })
    }

    /// E₂ = 4E₁ = 6.25 μeV and E_ch = 5(E₁+E₂); the device used for the
    /// adiabaticity and phase-comparison sweeps.
    pub fn reference() -> Self {
        let e1 = 1.5625;
        let e2 = 6.25;
        Self {
            e1,
            e2,
            ech: 5.0 * (e1 + e2),
        }
    }

    /// E₁ + E₂ in μeV; the energy unit of all internal computations.
    pub fn energy_scale(&self) -> f64 {
        self.e1 + self.e2
    }

    /// τ₀ = ħ/(E₁+E₂) in nanoseconds.
    pub fn tau0_ns(&self) -> f64 {
        units::time_unit_ns(self.energy_scale())
    }

    pub fn is_symmetric(&self) -> bool {
        self.e1 == self.e2
    }

    /// Parameters in units of E₁+E₂.
    pub(crate) fn reduced(&self) -> Reduced {
        let s = self.energy_scale();
        Reduced {
            asym: (self.e1 - self.e2) / s,
            ech: self.ech / s,
        }
    }
}

/// Device parameters divided by E₁+E₂ (so the symmetric part is 1).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Reduced {
    /// (E₁−E₂)/(E₁+E₂)
    pub asym: f64,
    /// E_ch/(E₁+E₂)
    pub ech: f64,
}

/// The externally driven pair (Φ/Φ₀, nₓᵉ).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlPoint {
    pub flux: f64,
    pub gate_charge: f64,
}

impl ControlPoint {
    pub fn new(flux: f64, gate_charge: f64) -> Self {
        Self { flux, gate_charge }
    }
}

/// Time derivative of a [`ControlPoint`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlRate {
    pub flux: f64,
    pub gate_charge: f64,
}

/// A fictitious magnetic field (or any real 3-vector in field units).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldVector {
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
}

impl FieldVector {
    pub const fn new(bx: f64, by: f64, bz: f64) -> Self {
        Self { bx, by, bz }
    }

    pub fn magnitude(&self) -> f64 {
        (self.bx * self.bx + self.by * self.by + self.bz * self.bz).sqrt()
    }

    pub fn transverse(&self) -> f64 {
        self.bx.hypot(self.by)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(k * self.bx, k * self.by, k * self.bz)
    }

    /// Unit vector along the field, `None` for the zero field.
    pub fn direction(&self) -> Option<BlochVector> {
        let m = self.magnitude();
        (m > 0.0).then(|| BlochVector::new_unchecked(self.bx / m, self.by / m, self.bz / m))
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.bx, self.by, self.bz]
    }
}

/// Pure state of the two charge levels, |0⟩ and |1⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState {
    pub amp0: Complex64,
    pub amp1: Complex64,
}

impl SpinState {
    /// Normalizes the given amplitudes.
    pub fn new(amp0: Complex64, amp1: Complex64) -> Result<Self> {
        let norm = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter(
                "state amplitudes must be finite and not both zero".into(),
            ));
        }
        Ok(Self {
            amp0: amp0 / norm,
            amp1: amp1 / norm,
        })
    }

    pub const fn ground() -> Self {
        Self {
            amp0: Complex64::new(1.0, 0.0),
            amp1: Complex64::new(0.0, 0.0),
        }
    }

    /// [e^{−iφ/2} cos(θ/2), e^{iφ/2} sin(θ/2)]
    pub fn from_angles(theta: f64, varphi: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        Self {
            amp0: Complex64::from_polar(c, -0.5 * varphi),
            amp1: Complex64::from_polar(s, 0.5 * varphi),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.amp0.norm_sqr() + self.amp1.norm_sqr()).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            amp0: self.amp0 / n,
            amp1: self.amp1 / n,
        }
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &SpinState) -> Complex64 {
        self.amp0.conj() * other.amp0 + self.amp1.conj() * other.amp1
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        Self {
            amp0: k * self.amp0,
            amp1: k * self.amp1,
        }
    }

    pub fn bloch(&self) -> BlochVector {
        bloch_map(self)
    }
}

/// A point on the unit sphere, n = ⟨ψ|σ|ψ⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub nx: f64,
    pub ny: f64,
    pub nz: f64,
}

impl BlochVector {
    /// Normalizes the given components.
    pub fn new(nx: f64, ny: f64, nz: f64) -> Result<Self> {
        let m = (nx * nx + ny * ny + nz * nz).sqrt();
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::InvalidParameter(
                "Bloch vector must be finite and nonzero".into(),
            ));
        }
        Ok(Self::new_unchecked(nx / m, ny / m, nz / m))
    }

    pub(crate) const fn new_unchecked(nx: f64, ny: f64, nz: f64) -> Self {
        Self { nx, ny, nz }
    }

    /// (sinθ cosφ, sinθ sinφ, cosθ)
    pub fn from_angles(theta: f64, varphi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = varphi.sin_cos();
        Self::new_unchecked(st * cp, st * sp, ct)
    }

    /// Polar angle in [0, π].
    pub fn polar(&self) -> f64 {
        self.nx.hypot(self.ny).atan2(self.nz)
    }

    /// Azimuth in (−π, π].
    pub fn azimuth(&self) -> f64 {
        self.ny.atan2(self.nx)
    }

    pub fn dot(&self, o: &BlochVector) -> f64 {
        self.nx * o.nx + self.ny * o.ny + self.nz * o.nz
    }

    pub fn distance(&self, o: &BlochVector) -> f64 {
        let (dx, dy, dz) = (self.nx - o.nx, self.ny - o.ny, self.nz - o.nz);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn norm(&self) -> f64 {
        (self.nx * self.nx + self.ny * self.ny + self.nz * self.nz).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.nx, self.ny, self.nz]
    }

    /// A spinor with this Bloch vector, in the gauge of
    /// [`SpinState::from_angles`].
    pub fn to_state(&self) -> SpinState {
        SpinState::from_angles(self.polar(), self.azimuth())
    }
}

impl fmt::Display for BlochVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6})", self.nx, self.ny, self.nz)
    }
}

/// E_J(Φ) = √((E₁−E₂)² + 4E₁E₂cos²(πΦ/Φ₀)), in μeV.
pub fn josephson_energy(params: &DeviceParams, flux: f64) -> f64 {
    let d = params.e1 - params.e2;
    let c = (PI * flux).cos();
    (d * d + 4.0 * params.e1 * params.e2 * c * c).sqrt()
}

/// Mixing angle α(Φ) with tanα = (E₁−E₂)tan(πΦ/Φ₀)/(E₁+E₂).
///
/// Evaluated as `atan2((E₁−E₂)sin πΦ, (E₁+E₂)cos πΦ)`, which stays smooth
/// through Φ = Φ₀/2. The result lies in (−π, π], so α(Φ+1) = α(Φ) ± π: the
/// field is 1-periodic in flux up to a half-turn about z, and exactly
/// 2-periodic.
pub fn mixing_angle(params: &DeviceParams, flux: f64) -> f64 {
    let (s, c) = (PI * flux).sin_cos();
    ((params.e1 - params.e2) * s).atan2((params.e1 + params.e2) * c)
}

/// B = (E_J cosα, −E_J sinα, E_ch(1−2nₓᵉ)) in μeV.
pub fn effective_field(params: &DeviceParams, cp: ControlPoint) -> FieldVector {
    let ej = josephson_energy(params, cp.flux);
    let alpha = mixing_angle(params, cp.flux);
    FieldVector::new(
        ej * alpha.cos(),
        -ej * alpha.sin(),
        params.ech * (1.0 - 2.0 * cp.gate_charge),
    )
}

/// Field in units of E₁+E₂.
pub(crate) fn reduced_field(params: &DeviceParams, cp: ControlPoint) -> FieldVector {
    effective_field(params, cp).scaled(1.0 / params.energy_scale())
}

/// dB/dt in units of E₁+E₂ per τ₀, from the control point and its rate.
///
/// Uses E_J cosα = (E₁+E₂)cos πΦ and E_J sinα = (E₁−E₂)sin πΦ.
pub(crate) fn reduced_field_rate(params: &DeviceParams, cp: ControlPoint, rate: ControlRate) -> FieldVector {
    let r = params.reduced();
    let (s, c) = (PI * cp.flux).sin_cos();
    FieldVector::new(
        -PI * s * rate.flux,
        -PI * r.asym * c * rate.flux,
        -2.0 * r.ech * rate.gate_charge,
    )
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// H = −½ B·σ.
pub fn hamiltonian(field: &FieldVector) -> Matrix2<Complex64> {
    let FieldVector { bx, by, bz } = *field;
    Matrix2::new(
        c(-0.5 * bz, 0.0),
        c(-0.5 * bx, 0.5 * by),
        c(-0.5 * bx, -0.5 * by),
        c(0.5 * bz, 0.0),
    )
}

/// n = ⟨ψ|σ|ψ⟩ for a normalized state.
pub fn bloch_map(state: &SpinState) -> BlochVector {
    let cross = state.amp0.conj() * state.amp1;
    BlochVector::new_unchecked(
        2.0 * cross.re,
        2.0 * cross.im,
        state.amp0.norm_sqr() - state.amp1.norm_sqr(),
    )
}

/// |ψ₊(θ,φ)⟩ = [e^{−iφ/2}cos(θ/2), e^{iφ/2}sin(θ/2)]
pub fn psi_plus(theta: f64, varphi: f64) -> SpinState {
    SpinState::from_angles(theta, varphi)
}

/// |ψ₋(θ,φ)⟩ = [−e^{−iφ/2}sin(θ/2), e^{iφ/2}cos(θ/2)]
pub fn psi_minus(theta: f64, varphi: f64) -> SpinState {
    let (s, c) = (0.5 * theta).sin_cos();
    SpinState {
        amp0: -Complex64::from_polar(s, -0.5 * varphi),
        amp1: Complex64::from_polar(c, 0.5 * varphi),
    }
}

/// The pair of orthogonal cyclic states fixed by the field at t = 0 and the
/// amplitudes of the prepared state on them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicBasis {
    pub theta_i: f64,
    pub varphi_i: f64,
    pub eta: f64,
    pub a_plus: Complex64,
    pub a_minus: Complex64,
}

impl CyclicBasis {
    /// Decomposes the state with Bloch angles (η, 0) onto ψ±(θᵢ, φᵢ).
    ///
    /// a± = ⟨ψ±(θᵢ,φᵢ)|ψ(η,0)⟩. These are the complex conjugates of the
    /// four-line closed form usually quoted for this decomposition; the two
    /// agree whenever φᵢ = 0.
    pub fn from_angles(theta_i: f64, varphi_i: f64, eta: f64) -> Self {
        let (sp, cp) = (0.5 * varphi_i).sin_cos();
        let a_plus = c((0.5 * (eta - theta_i)).cos() * cp, (0.5 * (eta + theta_i)).cos() * sp);
        let a_minus = c((0.5 * (eta - theta_i)).sin() * cp, -(0.5 * (eta + theta_i)).sin() * sp);
        Self {
            theta_i,
            varphi_i,
            eta,
            a_plus,
            a_minus,
        }
    }

    pub fn psi_plus(&self) -> SpinState {
        psi_plus(self.theta_i, self.varphi_i)
    }

    pub fn psi_minus(&self) -> SpinState {
        psi_minus(self.theta_i, self.varphi_i)
    }

    /// The prepared state, ground state of the field at Φ = 0, nₓᵉ = 0.
    pub fn initial_state(&self) -> SpinState {
        SpinState::from_angles(self.eta, 0.0)
    }
}

/// Cyclic basis for a qubit prepared in the ground state at Φ = 0, nₓᵉ = 0
/// whose field then snaps to `field_at_0`.
pub fn cyclic_basis(params: &DeviceParams, field_at_0: &FieldVector) -> Result<CyclicBasis> {
    if field_at_0.magnitude() == 0.0 {
        return Err(Error::ZeroField { t: 0.0 });
    }
    let theta_i = field_at_0.transverse().atan2(field_at_0.bz);
    let varphi_i = field_at_0.by.atan2(field_at_0.bx);
    let eta = (josephson_energy(params, 0.0) / params.ech).atan();
    Ok(CyclicBasis::from_angles(theta_i, varphi_i, eta))
}
