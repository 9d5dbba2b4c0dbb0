//! Time evolution of the qubit along a drive: the Schrödinger equation
//! iψ' = Hψ and the precession equation n' = −B×n (ħ = 1, energies in
//! units of E₁+E₂, time in τ₀).

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use crate::qubit::{
    reduced_field, reduced_field_rate, BlochVector, ControlPoint, DeviceParams, FieldVector, SpinState,
};
use crate::schedule::Schedule;

/// Tolerances and output density of an evolution run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest internal step, in τ₀.
    pub max_step: f64,
    /// Number of uniformly spaced output samples including both endpoints.
    pub sample_count: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            max_step: f64::INFINITY,
            sample_count: 4097,
        }
    }
}

impl IntegratorConfig {
    pub fn with_samples(mut self, n: usize) -> Self {
        self.sample_count = n;
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if self.max_step.is_nan() || self.max_step <= 0.0 {
            return Err(Error::InvalidParameter("max_step must be positive".into()));
        }
        if self.sample_count < 2 {
            return Err(Error::InvalidParameter("sample_count must be at least 2".into()));
        }
        Ok(())
    }

    pub(crate) fn ode_options(&self) -> OdeOptions {
        OdeOptions {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            ..OdeOptions::default()
        }
    }
}

/// A time-dependent field on [0, duration], in units of E₁+E₂.
pub trait Drive: Sync {
    fn duration(&self) -> f64;

    /// Interior times where the field is not smooth; integration restarts there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn field(&self, t: f64) -> FieldVector;

    /// dB/dt, when known in closed form.
    fn field_rate(&self, _t: f64) -> Option<FieldVector> {
        None
    }

    /// The control point producing the field, for export.
    fn control(&self, _t: f64) -> ControlPoint {
        ControlPoint::default()
    }

    /// μeV per internal energy unit.
    fn energy_scale(&self) -> f64 {
        1.0
    }
}

/// A device driven by a control schedule.
#[derive(Debug, Clone, Copy)]
pub struct ScheduledDrive<'a> {
    pub params: DeviceParams,
    pub schedule: &'a Schedule,
}

impl<'a> ScheduledDrive<'a> {
    pub fn new(params: &DeviceParams, schedule: &'a Schedule) -> Self {
        Self {
            params: *params,
            schedule,
        }
    }

    fn clamp(&self, t: f64) -> f64 {
        t.clamp(0.0, self.schedule.duration())
    }
}

impl Drive for ScheduledDrive<'_> {
    fn duration(&self) -> f64 {
        self.schedule.duration()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.schedule.breakpoints()
    }

    fn field(&self, t: f64) -> FieldVector {
        reduced_field(&self.params, self.control(t))
    }

    fn field_rate(&self, t: f64) -> Option<FieldVector> {
        let t = self.clamp(t);
        let cp = self.schedule.eval(t).ok()?;
        let rate = self.schedule.rate(t).ok()?;
        Some(reduced_field_rate(&self.params, cp, rate))
    }

    fn control(&self, t: f64) -> ControlPoint {
        self.schedule
            .eval(self.clamp(t))
            .expect("clamped time lies inside the schedule")
    }

    fn energy_scale(&self) -> f64 {
        self.params.energy_scale()
    }
}

/// Constant field, mostly for tests and reference solutions.
#[derive(Debug, Clone, Copy)]
pub struct ConstantDrive {
    pub field: FieldVector,
    pub duration: f64,
}

impl Drive for ConstantDrive {
    fn duration(&self) -> f64 {
        self.duration
    }

    fn field(&self, _t: f64) -> FieldVector {
        self.field
    }

    fn field_rate(&self, _t: f64) -> Option<FieldVector> {
        Some(FieldVector::default())
    }
}

/// Time-sampled record of one evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub controls: Vec<ControlPoint>,
    /// Field at each sample, units of E₁+E₂.
    pub fields: Vec<FieldVector>,
    /// `None` for Bloch-only runs.
    pub states: Option<Vec<SpinState>>,
    pub bloch: Vec<BlochVector>,
    /// ⟨ψ|H|ψ⟩ = −½B·n, units of E₁+E₂.
    pub hamiltonian_expectation: Vec<f64>,
    /// μeV per internal energy unit.
    pub energy_scale: f64,
    /// Largest relative change of ‖ψ‖ (or ‖n‖) over one sample interval,
    /// i.e. the correction applied when renormalizing at that sample.
    pub max_norm_drift: f64,
    /// Largest |‖ψ‖ − 1| accumulated from t = 0 without renormalization.
    pub cumulative_norm_drift: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Field in μeV at sample `k`.
    pub fn field_uev(&self, k: usize) -> FieldVector {
        self.fields[k].scaled(self.energy_scale)
    }

    pub fn states(&self) -> Result<&[SpinState]> {
        self.states.as_deref().ok_or(Error::MissingStates)
    }
}

/// Norm bookkeeping for an unnormalized linear evolution sampled in order.
#[derive(Debug, Default)]
pub(crate) struct NormDrift {
    previous: Option<f64>,
    pub per_interval: f64,
    pub cumulative: f64,
}

impl NormDrift {
    pub fn record(&mut self, norm: f64) {
        let prev = self.previous.unwrap_or(1.0);
        self.per_interval = self.per_interval.max((norm / prev - 1.0).abs());
        self.cumulative = self.cumulative.max((norm - 1.0).abs());
        self.previous = Some(norm);
    }
}

pub(crate) fn uniform_samples(duration: f64, count: usize) -> Vec<f64> {
    let last = (count - 1) as f64;
    (0..count)
        .map(|k| {
            if k + 1 == count {
                duration
            } else {
                duration * k as f64 / last
            }
        })
        .collect()
}

/// Splits [t_start, t_end] at `breakpoints` and integrates piece
/// by piece, assigning each sample to the piece that ends at or after it.
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate_piecewise<const N: usize, F, S>(
    breakpoints: &[f64],
    rhs: F,
    y0: [f64; N],
    t_start: f64,
    t_end: f64,
    samples: &[f64],
    opts: &OdeOptions,
    mut on_sample: S,
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    S: FnMut(usize, f64, &[f64; N]),
{
    let forward = t_end >= t_start;
    let (lo, hi) = if forward { (t_start, t_end) } else { (t_end, t_start) };
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > lo && b < hi).collect();
    cuts.sort_by(f64::total_cmp);
    if !forward {
        cuts.reverse();
    }
    let mut bounds = vec![t_start];
    bounds.extend(cuts);
    bounds.push(t_end);

    let mut y = y0;
    let mut next = 0;
    for (piece, w) in bounds.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let last_piece = piece + 2 == bounds.len();
        let first = next;
        while next < samples.len()
            && (last_piece
                || if forward {
                    samples[next] <= b
                } else {
                    samples[next] >= b
                })
        {
            next += 1;
        }
        let chunk = &samples[first..next];
        let (y_end, _) = ode::integrate(&rhs, a, b, y, opts, chunk, |i, t, ys| on_sample(first + i, t, ys))?;
        y = y_end;
    }
    Ok(y)
}

fn schrodinger_rhs(b: FieldVector, y: &[f64; 4]) -> [f64; 4] {
    let p0 = Complex64::new(y[0], y[1]);
    let p1 = Complex64::new(y[2], y[3]);
    let half_i = Complex64::new(0.0, 0.5);
    // ψ' = −iHψ with H = −½ B·σ
    let d0 = half_i * (b.bz * p0 + Complex64::new(b.bx, -b.by) * p1);
    let d1 = half_i * (Complex64::new(b.bx, b.by) * p0 - b.bz * p1);
    [d0.re, d0.im, d1.re, d1.im]
}

fn bloch_rhs(b: FieldVector, n: &[f64; 3]) -> [f64; 3] {
    // n' = n × B
    [
        n[1] * b.bz - n[2] * b.by,
        n[2] * b.bx - n[0] * b.bz,
        n[0] * b.by - n[1] * b.bx,
    ]
}

fn expectation(b: &FieldVector, n: &BlochVector) -> f64 {
    -0.5 * (b.bx * n.nx + b.by * n.ny + b.bz * n.nz)
}

fn check_state(psi0: &SpinState) -> Result<()> {
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "initial state must be normalized, |psi| = {}",
            psi0.norm()
        )));
    }
    Ok(())
}

/// Solves the Schrödinger equation along `sched` from `psi0`.
pub fn evolve_state(
    params: &DeviceParams,
    sched: &Schedule,
    psi0: SpinState,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    evolve_state_with(&ScheduledDrive::new(params, sched), psi0, cfg)
}

/// Solves the Schrödinger equation for an arbitrary drive.
pub fn evolve_state_with(drive: &dyn Drive, psi0: SpinState, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    check_state(&psi0)?;
    let tau = drive.duration();
    let samples = uniform_samples(tau, cfg.sample_count);
    let n = samples.len();
    let mut states = vec![SpinState::ground(); n];
    let mut drift = NormDrift::default();
    let y0 = [psi0.amp0.re, psi0.amp0.im, psi0.amp1.re, psi0.amp1.im];
    integrate_piecewise(
        &drive.breakpoints(),
        |t, y: &[f64; 4]| schrodinger_rhs(drive.field(t), y),
        y0,
        0.0,
        tau,
        &samples,
        &cfg.ode_options(),
        |k, _, y| {
            let raw = SpinState {
                amp0: Complex64::new(y[0], y[1]),
                amp1: Complex64::new(y[2], y[3]),
            };
            drift.record(raw.norm());
            states[k] = raw.normalized();
        },
    )?;
    let bloch: Vec<BlochVector> = states.iter().map(SpinState::bloch).collect();
    Ok(assemble(drive, samples, Some(states), bloch, drift))
}

/// Integrates the precession equation n' = −B×n from `n0`.
pub fn evolve_bloch(
    params: &DeviceParams,
    sched: &Schedule,
    n0: BlochVector,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    evolve_bloch_with(&ScheduledDrive::new(params, sched), n0, cfg)
}

pub fn evolve_bloch_with(drive: &dyn Drive, n0: BlochVector, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if (n0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(
            "initial Bloch vector must be a unit vector".into(),
        ));
    }
    let tau = drive.duration();
    let samples = uniform_samples(tau, cfg.sample_count);
    let mut bloch = vec![n0; samples.len()];
    let mut drift = NormDrift::default();
    integrate_piecewise(
        &drive.breakpoints(),
        |t, y: &[f64; 3]| bloch_rhs(drive.field(t), y),
        n0.as_array(),
        0.0,
        tau,
        &samples,
        &cfg.ode_options(),
        |k, _, y| {
            let m = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
            drift.record(m);
            bloch[k] = BlochVector::new_unchecked(y[0] / m, y[1] / m, y[2] / m);
        },
    )?;
    Ok(assemble(drive, samples, None, bloch, drift))
}

fn assemble(
    drive: &dyn Drive,
    times: Vec<f64>,
    states: Option<Vec<SpinState>>,
    bloch: Vec<BlochVector>,
    drift: NormDrift,
) -> Trajectory {
    let controls: Vec<ControlPoint> = times.iter().map(|&t| drive.control(t)).collect();
    let fields: Vec<FieldVector> = times.iter().map(|&t| drive.field(t)).collect();
    let hamiltonian_expectation = fields.iter().zip(&bloch).map(|(b, n)| expectation(b, n)).collect();
    Trajectory {
        times,
        controls,
        fields,
        states,
        bloch,
        hamiltonian_expectation,
        energy_scale: drive.energy_scale(),
        max_norm_drift: drift.per_interval,
        cumulative_norm_drift: drift.cumulative,
    }
}

/// Propagates `psi` from `t_from` to `t_to` (either direction) without
/// recording samples.
pub fn propagate(
    drive: &dyn Drive,
    psi: SpinState,
    t_from: f64,
    t_to: f64,
    cfg: &IntegratorConfig,
) -> Result<SpinState> {
    cfg.validate()?;
    let y0 = [psi.amp0.re, psi.amp0.im, psi.amp1.re, psi.amp1.im];
    let y = integrate_piecewise(
        &drive.breakpoints(),
        |t, y: &[f64; 4]| schrodinger_rhs(drive.field(t), y),
        y0,
        t_from,
        t_to,
        &[],
        &cfg.ode_options(),
        |_, _, _| {},
    )?;
    Ok(SpinState {
        amp0: Complex64::new(y[0], y[1]),
        amp1: Complex64::new(y[2], y[3]),
    })
}

/// The 2×2 evolution operator over the whole drive, columns U|0⟩ and U|1⟩.
pub fn evolution_operator(drive: &dyn Drive, cfg: &IntegratorConfig) -> Result<Matrix2<Complex64>> {
    let tau = drive.duration();
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let u0 = propagate(drive, SpinState { amp0: one, amp1: zero }, 0.0, tau, cfg)?;
    let u1 = propagate(drive, SpinState { amp0: zero, amp1: one }, 0.0, tau, cfg)?;
    Ok(Matrix2::new(u0.amp0, u1.amp0, u0.amp1, u1.amp1))
}

/// One sample of the adiabaticity diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticSample {
    pub t: f64,
    pub n_z: f64,
    pub bhat_z: f64,
    /// |n − B̂|
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticityTrace {
    pub samples: Vec<AdiabaticSample>,
    /// max |n − B̂|
    pub max_deviation: f64,
    /// max |n_z − B̂_z|
    pub max_z_gap: f64,
}

/// Compares the Bloch vector with the instantaneous field direction.
pub fn adiabaticity_trace(traj: &Trajectory) -> Result<AdiabaticityTrace> {
    if traj.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    let mut samples = Vec::with_capacity(traj.len());
    let (mut max_dev, mut max_gap) = (0.0f64, 0.0f64);
    for ((&t, b), n) in traj.times.iter().zip(&traj.fields).zip(&traj.bloch) {
        let bhat = b.direction().ok_or(Error::ZeroField { t })?;
        let deviation = n.distance(&bhat);
        max_dev = max_dev.max(deviation);
        max_gap = max_gap.max((n.nz - bhat.nz).abs());
        samples.push(AdiabaticSample {
            t,
            n_z: n.nz,
            bhat_z: bhat.nz,
            deviation,
        });
    }
    Ok(AdiabaticityTrace {
        samples,
        max_deviation: max_dev,
        max_z_gap: max_gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicityCheck {
    pub cyclic: bool,
    /// |n(τ) − n(0)|
    pub residual: f64,
}

pub fn cyclicity_check(traj: &Trajectory, tol: f64) -> CyclicityCheck {
    let residual = match (traj.bloch.first(), traj.bloch.last()) {
        (Some(a), Some(b)) => a.distance(b),
        _ => 0.0,
    };
    CyclicityCheck {
        cyclic: residual < tol || residual == 0.0,
        residual,
    }
}
