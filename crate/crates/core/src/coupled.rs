//! Two capacitively coupled qubits: a control i and a target j with
//! H = H_i⊗I + I⊗H_j + E_ij (n − nₓ,ᵢ)⊗(n − nₓ,ⱼ), n = diag(0, 1).
//!
//! With the control in charge state |l⟩ the coupling adds
//! E_ij(l − nₓ,ᵢ)·n_j to the target, raising the energy of |1⟩ and so
//! shifting the target field to B_z + E_ij(l − nₓ,ᵢ).

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;

use crate::dynamics::{
    evolve_state_with, integrate_piecewise, uniform_samples, Drive, IntegratorConfig, NormDrift, ScheduledDrive,
};
use crate::error::{Error, Result};
use crate::io::fmt_sig;
use crate::phases::pancharatnam_line_integral;
use crate::qubit::{effective_field, hamiltonian, ControlPoint, DeviceParams, FieldVector, SpinState};
use crate::schedule::{process_ii_shifted, ProcessIIParams, Schedule};

/// Capacitive coupling energy E_ij = E_ch·C_ij/C, μeV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    pub e_coupling: f64,
}

impl CouplingParams {
    pub fn new(e_coupling: f64) -> Result<Self> {
        if !(e_coupling.is_finite() && e_coupling >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling energy must be finite and non-negative, got {e_coupling}"
            )));
        }
        Ok(Self { e_coupling })
    }
}

fn check_charge(l: u8) -> Result<f64> {
    match l {
        0 | 1 => Ok(f64::from(l)),
        _ => Err(Error::InvalidParameter(format!(
            "control charge state must be 0 or 1, got {l}"
        ))),
    }
}

/// Shift of the target's B_z for control state `l`, μeV.
pub fn conditional_shift(coupling: &CouplingParams, nx_i: f64, l: u8) -> Result<f64> {
    Ok(coupling.e_coupling * (check_charge(l)? - nx_i))
}

/// Target field (μeV) when the control sits in charge state `l`.
pub fn conditional_field(
    params_j: &DeviceParams,
    cp_j: ControlPoint,
    coupling: &CouplingParams,
    nx_i: f64,
    l: u8,
) -> Result<FieldVector> {
    let mut b = effective_field(params_j, cp_j);
    b.bz += conditional_shift(coupling, nx_i, l)?;
    Ok(b)
}

/// The target's drive seen through a control held in charge state `l`.
/// Times and energies are in the target's units.
#[derive(Clone, Copy)]
pub struct ConditionalDrive<'a> {
    target: ScheduledDrive<'a>,
    control: ScheduledDrive<'a>,
    /// E_ij in target units.
    coupling: f64,
    l: f64,
}

impl<'a> ConditionalDrive<'a> {
    pub fn new(
        params_j: &DeviceParams,
        sched_j: &'a Schedule,
        params_i: &DeviceParams,
        sched_i: &'a Schedule,
        coupling: &CouplingParams,
        l: u8,
    ) -> Result<Self> {
        Ok(Self {
            target: ScheduledDrive::new(params_j, sched_j),
            control: ScheduledDrive::new(params_i, sched_i),
            coupling: coupling.e_coupling / params_j.energy_scale(),
            l: check_charge(l)?,
        })
    }

    fn nx_i(&self, t: f64) -> f64 {
        self.control.control(t).gate_charge
    }
}

impl Drive for ConditionalDrive<'_> {
    fn duration(&self) -> f64 {
        self.target.duration()
    }

    fn breakpoints(&self) -> Vec<f64> {
        merged_breakpoints(&self.target, &self.control)
    }

    fn field(&self, t: f64) -> FieldVector {
        let mut b = self.target.field(t);
        b.bz += self.coupling * (self.l - self.nx_i(t));
        b
    }

    fn control(&self, t: f64) -> ControlPoint {
        self.target.control(t)
    }

    fn energy_scale(&self) -> f64 {
        self.target.energy_scale()
    }
}

fn merged_breakpoints(a: &dyn Drive, b: &dyn Drive) -> Vec<f64> {
    let mut v = a.breakpoints();
    v.extend(b.breakpoints());
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Process II for the target, built so that χ₀ is constant for the field
/// shifted by control state `l`.
pub fn conditional_schedule(
    params_j: &DeviceParams,
    p: ProcessIIParams,
    coupling: &CouplingParams,
    nx_i: f64,
    l: u8,
) -> Result<Schedule> {
    process_ii_shifted(params_j, p, conditional_shift(coupling, nx_i, l)?)
}

/// Geometric phase sgn(ω)·π(1 − cosχ₀ˡ) of the target's cyclic state
/// n(χ₀ˡ, 0) under the conditional schedule.
pub fn conditional_phase(
    params_j: &DeviceParams,
    p: ProcessIIParams,
    coupling: &CouplingParams,
    nx_i: f64,
    l: u8,
) -> Result<f64> {
    conditional_schedule(params_j, p, coupling, nx_i, l)?;
    Ok(p.omega.signum() * PI * (1.0 - p.chi0.cos()))
}

/// The same phase from the line integral along the simulated target path,
/// with the control's gate charge held at `nx_i`.
pub fn simulated_conditional_phase(
    params_j: &DeviceParams,
    p: ProcessIIParams,
    coupling: &CouplingParams,
    nx_i: f64,
    l: u8,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let sched_j = conditional_schedule(params_j, p, coupling, nx_i, l)?;
    let sched_i = Schedule::constant(sched_j.duration(), ControlPoint::new(0.0, nx_i))?;
    let drive = ConditionalDrive::new(params_j, &sched_j, params_j, &sched_i, coupling, l)?;
    let traj = evolve_state_with(&drive, SpinState::from_angles(p.chi0, 0.0), cfg)?;
    pancharatnam_line_integral(&traj)
}

/// How the control qubit is modelled in the full 4×4 evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    /// The control's transverse field is removed, so its charge state never changes.
    Frozen,
    /// The control precesses under its own field.
    Literal,
}

/// A coupled pair. Times and energies are in units of the target's τ₀ and
/// E₁+E₂; the control schedule is read on the same time axis.
#[derive(Clone, Copy)]
pub struct TwoQubitSystem<'a> {
    control: ScheduledDrive<'a>,
    target: ScheduledDrive<'a>,
    /// Control energies in target units per control unit.
    control_scale: f64,
    coupling: f64,
    mode: ControlMode,
}

impl<'a> TwoQubitSystem<'a> {
    pub fn new(
        params_i: &DeviceParams,
        sched_i: &'a Schedule,
        params_j: &DeviceParams,
        sched_j: &'a Schedule,
        coupling: &CouplingParams,
        mode: ControlMode,
    ) -> Result<Self> {
        if sched_i.duration() < sched_j.duration() {
            return Err(Error::InvalidParameter(format!(
                "control schedule ({}) is shorter than the target schedule ({})",
                sched_i.duration(),
                sched_j.duration()
            )));
        }
        Ok(Self {
            control: ScheduledDrive::new(params_i, sched_i),
            target: ScheduledDrive::new(params_j, sched_j),
            control_scale: params_i.energy_scale() / params_j.energy_scale(),
            coupling: coupling.e_coupling / params_j.energy_scale(),
            mode,
        })
    }

    pub fn duration(&self) -> f64 {
        self.target.duration()
    }

    fn control_field(&self, t: f64) -> FieldVector {
        let mut b = self.control.field(t).scaled(self.control_scale);
        if self.mode == ControlMode::Frozen {
            b.bx = 0.0;
            b.by = 0.0;
        }
        b
    }

    fn charge_offsets(&self, t: f64) -> (f64, f64) {
        (self.control.control(t).gate_charge, self.target.control(t).gate_charge)
    }

    /// The 4×4 Hamiltonian in the basis |00⟩, |01⟩, |10⟩, |11⟩ (control first).
    pub fn hamiltonian(&self, t: f64) -> Matrix4<Complex64> {
        let hi = hamiltonian(&self.control_field(t));
        let hj = hamiltonian(&self.target.field(t));
        let id = Matrix2::<Complex64>::identity();
        let (nxi, nxj) = self.charge_offsets(t);
        let ni = Matrix2::from_diagonal(&nalgebra::Vector2::new(
            Complex64::from(-nxi),
            Complex64::from(1.0 - nxi),
        ));
        let nj = Matrix2::from_diagonal(&nalgebra::Vector2::new(
            Complex64::from(-nxj),
            Complex64::from(1.0 - nxj),
        ));
        hi.kronecker(&id) + id.kronecker(&hj) + ni.kronecker(&nj) * Complex64::from(self.coupling)
    }

    /// Scalar energy picked up by the control-|l⟩ block in frozen mode on
    /// top of the conditional-field evolution of the target:
    /// ⟨l|H_i|l⟩ + E_ij(l − nₓ,ᵢ)(½ − nₓ,ⱼ).
    pub fn frozen_block_energy(&self, t: f64, l: u8) -> Result<f64> {
        let lf = check_charge(l)?;
        let bz = self.control_field(t).bz;
        let (nxi, nxj) = self.charge_offsets(t);
        Ok(-0.5 * bz * (1.0 - 2.0 * lf) + self.coupling * (lf - nxi) * (0.5 - nxj))
    }

    /// Target drive with the control held in |l⟩.
    pub fn conditional_drive(&self, l: u8) -> Result<ConditionalDrive<'a>> {
        Ok(ConditionalDrive {
            target: self.target,
            control: self.control,
            coupling: self.coupling,
            l: check_charge(l)?,
        })
    }

    /// Integrates i∂ₜΨ = HΨ from `psi0`.
    pub fn evolve(&self, psi0: Vector4<Complex64>, cfg: &IntegratorConfig) -> Result<TwoQubitTrajectory> {
        cfg.validate()?;
        if (psi0.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(
                "initial two-qubit state must be normalized".into(),
            ));
        }
        let tau = self.duration();
        let times = uniform_samples(tau, cfg.sample_count);
        let mut states = vec![Vector4::zeros(); times.len()];
        let mut drift = NormDrift::default();
        let mut y0 = [0.0; 8];
        for k in 0..4 {
            y0[2 * k] = psi0[k].re;
            y0[2 * k + 1] = psi0[k].im;
        }
        integrate_piecewise(
            &merged_breakpoints(&self.target, &self.control),
            |t, y: &[f64; 8]| {
                let h = self.hamiltonian(t);
                let psi = Vector4::from_fn(|k, _| Complex64::new(y[2 * k], y[2 * k + 1]));
                let d = h * psi * Complex64::new(0.0, -1.0);
                let mut out = [0.0; 8];
                for k in 0..4 {
                    out[2 * k] = d[k].re;
                    out[2 * k + 1] = d[k].im;
                }
                out
            },
            y0,
            0.0,
            tau,
            &times,
            &cfg.ode_options(),
            |k, _, y| {
                let v = Vector4::from_fn(|m, _| Complex64::new(y[2 * m], y[2 * m + 1]));
                let n = v.norm();
                drift.record(n);
                states[k] = v / Complex64::from(n);
            },
        )?;
        Ok(TwoQubitTrajectory {
            times,
            states,
            max_norm_drift: drift.per_interval,
            cumulative_norm_drift: drift.cumulative,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitTrajectory {
    pub times: Vec<f64>,
    /// Amplitudes on |00⟩, |01⟩, |10⟩, |11⟩.
    pub states: Vec<Vector4<Complex64>>,
    /// As [`crate::dynamics::Trajectory::max_norm_drift`].
    pub max_norm_drift: f64,
    pub cumulative_norm_drift: f64,
}

pub const TWO_QUBIT_HEADER: &str = "t,re00,im00,re01,im01,re10,im10,re11,im11";

impl TwoQubitTrajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TWO_QUBIT_HEADER);
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut cells = vec![fmt_sig(*t)];
            for a in s.iter() {
                cells.push(fmt_sig(a.re));
                cells.push(fmt_sig(a.im));
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Full 4×4 evolution of a coupled pair.
#[allow(clippy::too_many_arguments)]
pub fn full_two_qubit_evolve(
    params_i: &DeviceParams,
    sched_i: &Schedule,
    params_j: &DeviceParams,
    sched_j: &Schedule,
    coupling: &CouplingParams,
    mode: ControlMode,
    psi0: Vector4<Complex64>,
    cfg: &IntegratorConfig,
) -> Result<TwoQubitTrajectory> {
    TwoQubitSystem::new(params_i, sched_i, params_j, sched_j, coupling, mode)?.evolve(psi0, cfg)
}

/// |a⟩⊗|b⟩ in the control-first basis.
pub fn product_state(a: &SpinState, b: &SpinState) -> Vector4<Complex64> {
    Vector4::new(a.amp0 * b.amp0, a.amp0 * b.amp1, a.amp1 * b.amp0, a.amp1 * b.amp1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve_state;
    use crate::io::parse_csv;
    use crate::schedule::{process_i, process_ii, ProcessIParams};

    fn device() -> DeviceParams {
        DeviceParams::reference()
    }

    #[test]
    fn conditional_field_examples() {
        let p = device();
        let cp = ControlPoint::new(0.2, 0.3);
        let zero = CouplingParams::new(0.0).unwrap();
        assert_eq!(
            conditional_field(&p, cp, &zero, 0.4, 1).unwrap(),
            effective_field(&p, cp)
        );
        let k = CouplingParams::new(1.5).unwrap();
        let b0 = conditional_field(&p, cp, &k, 0.4, 0).unwrap();
        let b1 = conditional_field(&p, cp, &k, 0.4, 1).unwrap();
        assert!((b1.bz - b0.bz - 1.5).abs() < 1e-12);
        assert_eq!((b0.bx, b0.by), (effective_field(&p, cp).bx, effective_field(&p, cp).by));
        for l in [0u8, 1] {
            let b = conditional_field(&p, cp, &k, f64::from(l), l).unwrap();
            assert_eq!(b, effective_field(&p, cp));
        }
        assert!(conditional_field(&p, cp, &k, 0.0, 2).is_err());
        assert!(CouplingParams::new(-1.0).is_err());
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let p = device();
        let si = process_i(ProcessIParams::reference(20.0)).unwrap();
        let sj = process_ii(&p, ProcessIIParams { chi0: 1.0, omega: 0.4 }).unwrap();
        let k = CouplingParams::new(2.0).unwrap();
        for mode in [ControlMode::Frozen, ControlMode::Literal] {
            let sys = TwoQubitSystem::new(&p, &si, &p, &sj, &k, mode).unwrap();
            for t in [0.0, 1.3, 7.7, 15.0] {
                let h = sys.hamiltonian(t);
                assert!((h - h.adjoint()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn uncoupled_pair_factorizes() {
        let p = device();
        let sj = process_ii(&p, ProcessIIParams { chi0: 2.0, omega: 1.2 }).unwrap();
        let si = process_i(ProcessIParams::reference(sj.duration())).unwrap();
        let k = CouplingParams::new(0.0).unwrap();
        let cfg = IntegratorConfig::default()
            .with_samples(65)
            .with_tolerances(1e-11, 1e-13);
        let (a, b) = (SpinState::from_angles(0.7, 0.2), SpinState::from_angles(2.0, 0.0));
        let full =
            full_two_qubit_evolve(&p, &si, &p, &sj, &k, ControlMode::Literal, product_state(&a, &b), &cfg).unwrap();
        let ta = evolve_state(&p, &si, a, &cfg).unwrap();
        let tb = evolve_state(&p, &sj, b, &cfg).unwrap();
        let (sa, sb) = (ta.states().unwrap(), tb.states().unwrap());
        for k in 0..full.times.len() {
            let expect = product_state(&sa[k], &sb[k]);
            let overlap = (expect.adjoint() * full.states[k])[(0, 0)].norm();
            assert!((overlap - 1.0).abs() < 1e-8, "t={}", full.times[k]);
        }
        assert!(full.max_norm_drift < 1e-9);
    }

    #[test]
    fn frozen_control_stays_in_charge_state() {
        let p = device();
        let si = Schedule::constant(10.0, ControlPoint::new(0.0, 0.1)).unwrap();
        let sj = process_i(ProcessIParams::reference(10.0)).unwrap();
        let k = CouplingParams::new(2.0).unwrap();
        let psi0 = product_state(&SpinState::from_angles(PI, 0.0), &SpinState::ground());
        let tr = full_two_qubit_evolve(
            &p,
            &si,
            &p,
            &sj,
            &k,
            ControlMode::Frozen,
            psi0,
            &IntegratorConfig::default().with_samples(33),
        )
        .unwrap();
        for s in &tr.states {
            assert!(s[0].norm() < 1e-14 && s[1].norm() < 1e-14);
        }
    }

    #[test]
    fn conditional_phase_closed_form_and_simulated() {
        let p = device();
        let k = CouplingParams::new(2.0).unwrap();
        let cfg = IntegratorConfig::default();
        let pp = ProcessIIParams { chi0: 2.0, omega: -1.1 };
        for l in [0u8, 1] {
            let closed = conditional_phase(&p, pp, &k, 0.1, l).unwrap();
            let sim = simulated_conditional_phase(&p, pp, &k, 0.1, l, &cfg).unwrap();
            assert!((closed - sim).abs() < 1e-5, "l={l}: {closed} vs {sim}");
        }
        let zero = CouplingParams::new(0.0).unwrap();
        let g0 = conditional_phase(&p, pp, &zero, 0.1, 0).unwrap();
        let g1 = conditional_phase(&p, pp, &zero, 0.1, 1).unwrap();
        assert_eq!(g0, g1);
    }

    #[test]
    fn csv_round_trip() {
        let p = device();
        let s = Schedule::constant(1.0, ControlPoint::new(0.1, 0.2)).unwrap();
        let k = CouplingParams::new(1.0).unwrap();
        let psi0 = product_state(&SpinState::from_angles(0.5, 0.0), &SpinState::from_angles(1.0, 0.3));
        let tr = full_two_qubit_evolve(
            &p,
            &s,
            &p,
            &s,
            &k,
            ControlMode::Literal,
            psi0,
            &IntegratorConfig::default().with_samples(5),
        )
        .unwrap();
        let rows = parse_csv(&tr.to_csv(), TWO_QUBIT_HEADER).unwrap();
        assert_eq!(rows.len(), 5);
        for (row, (t, s)) in rows.iter().zip(tr.times.iter().zip(&tr.states)) {
            assert!((row[0] - t).abs() < 1e-11);
            assert!((row[5] - s[2].re).abs() < 1e-11 && (row[8] - s[3].im).abs() < 1e-11);
        }
    }

    #[test]
    fn control_schedule_must_cover_target() {
        let p = device();
        let short = Schedule::constant(1.0, ControlPoint::default()).unwrap();
        let long = Schedule::constant(2.0, ControlPoint::default()).unwrap();
        let k = CouplingParams::new(1.0).unwrap();
        assert!(TwoQubitSystem::new(&p, &short, &p, &long, &k, ControlMode::Frozen).is_err());
    }
}
