//! Command-line front end for the geophase simulator.
//!
//! Every command renders its whole output into a string before anything is
//! written, so a failed run never leaves a half-written file behind.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geophase::calibration::{
    default_bracket, gamma_to_chi0, numeric_zero_dynamic, omega_with_winding, omega_zero_dynamic, CalibrationMethod,
};
use geophase::dynamics::{adiabaticity_trace, cyclicity_check, evolve_bloch, evolve_state};
use geophase::gates::{
    cnot, conditional_gate, cyclic_gate, fidelity, matrix_table, measure_p1, measure_p1_closed, u1_sq, u2_sq,
    unitarity_defect, xor_compose, Unitary4,
};
use geophase::io::{fmt_sig, trajectory_csv, Report};
use geophase::phases::{
    adiabatic_phase, eigenstate_following_phase, geometric_phase_cyclic, line_integral_decomposition,
    overlap_minus_dynamic, wrap_angle, PhaseMethod, CYCLIC_TOL,
};
use geophase::qubit::{effective_field, CyclicBasis};
use geophase::schedule::parse_tabulated;
use geophase::{
    process_i, process_ii, DeviceParams, IntegratorConfig, ProcessIIParams, ProcessIParams, Schedule, SpinState,
    Trajectory,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Gate names accepted by `gates --gate`.
pub const KNOWN_GATES: &[&str] = &["u1", "u2", "cyclic", "conditional", "xor", "cnot"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(geophase::Error),
    #[error(
        "the path is not closed (|n(tau) - n(0)| = {residual:.3e} > {tol:.0e}); rerun with --allow-noncyclic \
         to report the open-path phase, whose geometric part then includes the endpoint term"
    )]
    NonCyclic { residual: f64, tol: f64 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) | CliError::NonCyclic { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<geophase::Error> for CliError {
    fn from(e: geophase::Error) -> Self {
        match e {
            geophase::Error::InvalidParameter(_) | geophase::Error::Parse { .. } => CliError::Usage(e.to_string()),
            other => CliError::Compute(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "geophase", version, about = "Geometric phases of a Josephson charge qubit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Junction coupling E1, μeV.
    #[arg(long, global = true, default_value_t = 1.5625)]
    pub e1: f64,
    /// Junction coupling E2, μeV.
    #[arg(long, global = true, default_value_t = 6.25)]
    pub e2: f64,
    /// Charging energy, μeV.
    #[arg(long, global = true, default_value_t = 39.0625)]
    pub ech: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub rel_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-11)]
    pub abs_tol: f64,
    /// Largest integrator step, τ₀.
    #[arg(long, global = true)]
    pub max_step: Option<f64>,
    /// Output samples per run, at least 2.
    #[arg(long, global = true, default_value_t = 4097)]
    pub samples: usize,
    /// Seed for randomized sweeps.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Log more detail to standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one schedule and write the trajectory CSV.
    Simulate(SimulateArgs),
    /// Integrate one schedule and report its phase decomposition.
    Phases(PhasesArgs),
    /// Find the drive frequency that cancels the dynamic phase.
    Calibrate(CalibrateArgs),
    /// Adiabaticity sweep of the rectangular loop over several durations.
    Fig2(Fig2Args),
    /// Cyclic versus adiabatic phase of the rotating drive over several durations.
    Fig3(Fig3Args),
    /// Print gate matrices and verification reports.
    Gates(GatesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcessArg {
    /// Rectangular loop in (flux, gate charge).
    I,
    /// Rotating drive with constant polar angle.
    Ii,
    /// Tabulated schedule read from --table.
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    /// `cyclic` for the rotating drive, `aligned` otherwise.
    Auto,
    /// Eigenstate aligned with the field at t = 0.
    Aligned,
    /// The cyclic state n(χ₀, 0) of the rotating drive.
    Cyclic,
    /// Ground state at zero flux and zero gate charge.
    Prepared,
    /// Charge state |0⟩.
    Charge0,
    /// Charge state |1⟩.
    Charge1,
}

#[derive(Debug, Clone, Args)]
pub struct ScheduleArgs {
    #[arg(long, value_enum, default_value_t = ProcessArg::I)]
    pub process: ProcessArg,
    /// Duration of the rectangular loop, τ₀.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Flux excursion, flux quanta.
    #[arg(long, default_value_t = 0.25)]
    pub phi_m: f64,
    /// Gate-charge excursion.
    #[arg(long, default_value_t = 0.20)]
    pub nxm: f64,
    /// Polar angle of the cyclic state, radians.
    #[arg(long, conflicts_with = "gamma")]
    pub chi0: Option<f64>,
    /// Target geometric phase in [0, 2π]; sets χ₀ = acos(1 − γ/π).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Drive frequency, 1/τ₀; the zero-dynamic-phase value when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// Tabulated schedule with header t,flux,gate_charge.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InitArg::Auto)]
    pub init: InitArg,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Integrate the Bloch equation only (amplitude columns left empty).
    #[arg(long)]
    pub bloch: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PhasesArgs {
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long, default_value = "overlap-minus-dynamic")]
    pub method: String,
    /// Accept open paths; the geometric phase then includes the endpoint term.
    #[arg(long)]
    pub allow_noncyclic: bool,
    /// Also report the adiabatic phase −Ω/2 of the field loop.
    #[arg(long)]
    pub adiabatic: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    /// Target geometric phase in [0, 2π].
    #[arg(long, conflicts_with = "chi0", required_unless_present = "chi0")]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub chi0: Option<f64>,
    #[arg(long, default_value = "analytic")]
    pub method: String,
    /// Full turns of dynamic phase allowed per period (analytic only).
    #[arg(long, default_value_t = 0)]
    pub winding: u32,
    /// With --winding, rotate with ω < 0 instead of ω > 0.
    #[arg(long)]
    pub negative: bool,
    /// Search interval for the numeric method, "lo,hi" in 1/τ₀.
    #[arg(long, allow_hyphen_values = true)]
    pub bracket: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct Fig2Args {
    /// Durations, τ₀, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,50,150,500,2000")]
    pub taus: Vec<f64>,
    #[arg(long, default_value_t = 0.25)]
    pub phi_m: f64,
    #[arg(long, default_value_t = 0.20)]
    pub nxm: f64,
    /// Output samples per τ₀; --samples acts as a floor.
    #[arg(long, default_value_t = 32.0)]
    pub samples_per_tau0: f64,
    /// Also write the n_z and B̂_z traces of every run here.
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// Keep every k-th sample in the traces file.
    #[arg(long, default_value_t = 16)]
    pub trace_stride: usize,
}

#[derive(Debug, Clone, Args)]
pub struct Fig3Args {
    /// Durations, τ₀, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "100,150,200,300,500,700,1000,1500,2000"
    )]
    pub taus: Vec<f64>,
    /// Polar angle of the cyclic state; defaults to 2π/3.
    #[arg(long, conflicts_with = "gamma")]
    pub chi0: Option<f64>,
    /// Target geometric phase in [0, 2π].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Rotate with ω < 0.
    #[arg(long)]
    pub negative: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GatesArgs {
    /// One of u1, u2, cyclic, conditional, xor, cnot.
    #[arg(long)]
    pub gate: Option<String>,
    /// Check the XOR composition against CNOT.
    #[arg(long)]
    pub xor_check: bool,
    /// Phase-shift gate at this γ.
    #[arg(long, allow_hyphen_values = true)]
    pub u1: Option<f64>,
    /// Mixing gate at this γ.
    #[arg(long, allow_hyphen_values = true)]
    pub u2: Option<f64>,
    /// Compare the two forms of the readout probability on random inputs.
    #[arg(long)]
    pub p1_check: bool,
    /// Draws for --p1-check.
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    #[arg(long, allow_hyphen_values = true, default_value_t = PI / 4.0)]
    pub gamma: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub gamma0: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = PI / 2.0)]
    pub gamma1: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub theta_i: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub phi_i: f64,
}

/// Everything one integration needs, validated before any computation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: DeviceParams,
    pub schedule: Schedule,
    pub initial: SpinState,
    pub integrator: IntegratorConfig,
    /// (χ₀, ω) of a rotating drive.
    pub rotating: Option<(f64, f64)>,
    pub seed: u64,
}

pub fn device(g: &GlobalArgs) -> CliResult<DeviceParams> {
    Ok(DeviceParams::new(g.e1, g.e2, g.ech)?)
}

pub fn integrator(g: &GlobalArgs) -> CliResult<IntegratorConfig> {
    let mut cfg = IntegratorConfig::default()
        .with_tolerances(g.rel_tol, g.abs_tol)
        .with_samples(g.samples);
    if let Some(h) = g.max_step {
        cfg.max_step = h;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn chi0_from(chi0: Option<f64>, gamma: Option<f64>) -> CliResult<Option<f64>> {
    match (chi0, gamma) {
        (Some(c), _) => Ok(Some(c)),
        (None, Some(g)) => Ok(Some(gamma_to_chi0(g)?)),
        (None, None) => Ok(None),
    }
}

impl RunConfig {
    pub fn resolve(g: &GlobalArgs, s: &ScheduleArgs) -> CliResult<Self> {
        let params = device(g)?;
        let integrator = integrator(g)?;
        let chi0 = chi0_from(s.chi0, s.gamma)?;
        let (schedule, rotating) = match s.process {
            ProcessArg::I => {
                let tau = s.tau.ok_or_else(|| CliError::Usage("--process i needs --tau".into()))?;
                let sched = process_i(ProcessIParams {
                    phi_m: s.phi_m,
                    nxm: s.nxm,
                    tau,
                })?;
                (sched, None)
            }
            ProcessArg::Ii => {
                let chi0 = chi0.ok_or_else(|| CliError::Usage("--process ii needs --chi0 or --gamma".into()))?;
                let omega = match s.omega {
                    Some(w) => w,
                    None => omega_zero_dynamic(&params, chi0)?.omega,
                };
                (
                    process_ii(&params, ProcessIIParams { chi0, omega })?,
                    Some((chi0, omega)),
                )
            }
            ProcessArg::Table => {
                let path = s
                    .table
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("--process table needs --table".into()))?;
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                (parse_tabulated(&text)?, None)
            }
        };
        let initial = initial_state(&params, &schedule, s.init, rotating)?;
        Ok(Self {
            params,
            schedule,
            initial,
            integrator,
            rotating,
            seed: g.seed,
        })
    }

    pub fn run(&self) -> CliResult<Trajectory> {
        Ok(evolve_state(
            &self.params,
            &self.schedule,
            self.initial,
            &self.integrator,
        )?)
    }
}

fn initial_state(
    params: &DeviceParams,
    sched: &Schedule,
    init: InitArg,
    rotating: Option<(f64, f64)>,
) -> CliResult<SpinState> {
    let aligned = || -> CliResult<SpinState> {
        let b = effective_field(params, sched.eval(0.0)?);
        b.direction()
            .map(|n| n.to_state())
            .ok_or(CliError::Compute(geophase::Error::ZeroField { t: 0.0 }))
    };
    match init {
        InitArg::Auto => match rotating {
            Some((chi0, _)) => Ok(SpinState::from_angles(chi0, 0.0)),
            None => aligned(),
        },
        InitArg::Aligned => aligned(),
        InitArg::Cyclic => match rotating {
            Some((chi0, _)) => Ok(SpinState::from_angles(chi0, 0.0)),
            None => Err(CliError::Usage("--init cyclic needs --process ii".into())),
        },
        InitArg::Prepared => {
            let basis = CyclicBasis::from_angles(0.0, 0.0, prepared_eta(params));
            Ok(basis.initial_state())
        }
        InitArg::Charge0 => Ok(SpinState::ground()),
        InitArg::Charge1 => Ok(SpinState::from_angles(PI, 0.0)),
    }
}

fn prepared_eta(params: &DeviceParams) -> f64 {
    (geophase::qubit::josephson_energy(params, 0.0) / params.ech).atan()
}

fn device_report(params: &DeviceParams, tau: f64) -> Report {
    Report::new()
        .number("e1_uev", params.e1)
        .number("e2_uev", params.e2)
        .number("ech_uev", params.ech)
        .number("tau0_ns", params.tau0_ns())
        .number("tau_over_tau0", tau)
        .number("tau_ns", tau * params.tau0_ns())
}

fn join(reports: &[Report]) -> String {
    reports.iter().map(Report::render).collect()
}

pub fn cmd_simulate(g: &GlobalArgs, a: &SimulateArgs) -> CliResult<String> {
    let run = RunConfig::resolve(g, &a.schedule)?;
    log::info!(
        "simulating {:?} over {} τ₀",
        run.schedule.kind(),
        run.schedule.duration()
    );
    let traj = if a.bloch {
        evolve_bloch(&run.params, &run.schedule, run.initial.bloch(), &run.integrator)?
    } else {
        run.run()?
    };
    log::info!("max per-interval norm drift {:e}", traj.max_norm_drift);
    Ok(trajectory_csv(&traj))
}

pub fn cmd_phases(g: &GlobalArgs, a: &PhasesArgs) -> CliResult<String> {
    let method: PhaseMethod = a.method.parse()?;
    let run = RunConfig::resolve(g, &a.schedule)?;
    let traj = run.run()?;
    let check = cyclicity_check(&traj, CYCLIC_TOL);
    if !check.cyclic && !a.allow_noncyclic {
        return Err(CliError::NonCyclic {
            residual: check.residual,
            tol: CYCLIC_TOL,
        });
    }
    let decomposition = match (method, check.cyclic) {
        (PhaseMethod::LineIntegral, _) => line_integral_decomposition(&traj)?,
        (PhaseMethod::OverlapMinusDynamic, true) => geometric_phase_cyclic(&traj)?,
        (PhaseMethod::OverlapMinusDynamic, false) => overlap_minus_dynamic(&traj)?,
    };
    let mut report = decomposition
        .report()
        .number("geometric_unwrapped", decomposition.geometric_unwrapped())
        .text("cyclic", check.cyclic)
        .number("cyclic_residual", check.residual)
        .number("eigenstate_phase", eigenstate_following_phase(&traj)?)
        .number("max_norm_drift", traj.max_norm_drift);
    if let Some((chi0, omega)) = run.rotating {
        report = report.number("chi0", chi0).number("omega", omega).number(
            "expected_geometric",
            wrap_angle(omega.signum() * PI * (1.0 - chi0.cos())),
        );
    }
    if a.adiabatic {
        report = report.number("adiabatic", adiabatic_phase(&run.params, &run.schedule)?);
    }
    Ok(join(&[report, device_report(&run.params, traj.duration())]))
}

fn parse_bracket(text: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Usage(format!("--bracket expects lo,hi, got `{text}`"));
    let (lo, hi) = text.split_once(',').ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn cmd_calibrate(g: &GlobalArgs, a: &CalibrateArgs) -> CliResult<String> {
    let params = device(g)?;
    let method: CalibrationMethod = a.method.parse()?;
    let chi0 = chi0_from(a.chi0, a.gamma)?.ok_or_else(|| CliError::Usage("give --gamma or --chi0".into()))?;
    let result = match method {
        CalibrationMethod::Analytic if a.winding == 0 && !a.negative => omega_zero_dynamic(&params, chi0)?,
        CalibrationMethod::Analytic => omega_with_winding(&params, chi0, a.winding, !a.negative)?,
        CalibrationMethod::Numeric => {
            if a.winding != 0 {
                return Err(CliError::Usage(
                    "--winding is only available with --method analytic".into(),
                ));
            }
            let bracket = match &a.bracket {
                Some(b) => parse_bracket(b)?,
                None => default_bracket(chi0),
            };
            numeric_zero_dynamic(&params, chi0, bracket, &integrator(g)?)?
        }
    };
    Ok(result.report(&params).render())
}

struct Fig2Row {
    tau: f64,
    max_z_gap: f64,
    max_deviation: f64,
    drift: f64,
    eigenstate_phase: f64,
    adiabatic_phase: f64,
    traces: String,
}

/// `max_deviation` is max|n_z − B̂_z|; `max_vector_deviation` is max|n − B̂|.
pub const FIG2_HEADER: &str = "tau,max_deviation,max_vector_deviation,max_norm_drift,eigenstate_phase,adiabatic_phase";
pub const FIG2_TRACE_HEADER: &str = "tau,t,n_z,bhat_z";

fn fig2_point(params: &DeviceParams, base: &IntegratorConfig, a: &Fig2Args, tau: f64) -> CliResult<Fig2Row> {
    let sched = process_i(ProcessIParams {
        phi_m: a.phi_m,
        nxm: a.nxm,
        tau,
    })?;
    let wanted = (a.samples_per_tau0 * tau).ceil() as usize;
    // multiple of 4 intervals keeps the corners on samples
    let samples = (wanted.max(base.sample_count) / 4 + 1) * 4 + 1;
    let cfg = (*base).with_samples(samples);
    let psi0 = initial_state(params, &sched, InitArg::Aligned, None)?;
    let traj = evolve_state(params, &sched, psi0, &cfg)?;
    let trace = adiabaticity_trace(&traj)?;
    let mut traces = String::new();
    if a.traces.is_some() {
        for s in trace.samples.iter().step_by(a.trace_stride.max(1)) {
            let _ = writeln!(
                traces,
                "{},{},{},{}",
                fmt_sig(tau),
                fmt_sig(s.t),
                fmt_sig(s.n_z),
                fmt_sig(s.bhat_z)
            );
        }
    }
    Ok(Fig2Row {
        tau,
        max_z_gap: trace.max_z_gap,
        max_deviation: trace.max_deviation,
        drift: traj.max_norm_drift,
        eigenstate_phase: eigenstate_following_phase(&traj)?,
        adiabatic_phase: adiabatic_phase(params, &sched)?,
        traces,
    })
}

pub fn cmd_fig2(g: &GlobalArgs, a: &Fig2Args) -> CliResult<(String, Option<String>)> {
    let params = device(g)?;
    let base = integrator(g)?;
    let rows = a
        .taus
        .par_iter()
        .map(|&tau| fig2_point(&params, &base, a, tau))
        .collect::<CliResult<Vec<_>>>()?;
    let mut out = format!("{FIG2_HEADER}\n");
    let mut traces = format!("{FIG2_TRACE_HEADER}\n");
    for r in &rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_sig(r.tau),
            fmt_sig(r.max_z_gap),
            fmt_sig(r.max_deviation),
            fmt_sig(r.drift),
            fmt_sig(r.eigenstate_phase),
            fmt_sig(r.adiabatic_phase)
        );
        traces.push_str(&r.traces);
    }
    Ok((out, a.traces.as_ref().map(|_| traces)))
}

pub const FIG3_HEADER: &str = "tau,omega,gamma,gamma_a,abs_diff,max_norm_drift";

/// Both phases are folded into [0, 2π) so the columns plot without jumps.
fn fig3_point(params: &DeviceParams, cfg: &IntegratorConfig, chi0: f64, omega: f64) -> CliResult<String> {
    let sched = process_ii(params, ProcessIIParams { chi0, omega })?;
    let traj = evolve_state(params, &sched, SpinState::from_angles(chi0, 0.0), cfg)?;
    let gamma = geometric_phase_cyclic(&traj)?.geometric;
    let gamma_a = adiabatic_phase(params, &sched)?;
    let tau = sched.duration();
    Ok(format!(
        "{},{},{},{},{},{}\n",
        fmt_sig(tau),
        fmt_sig(omega),
        fmt_sig(gamma.rem_euclid(2.0 * PI)),
        fmt_sig(gamma_a.rem_euclid(2.0 * PI)),
        fmt_sig(wrap_angle(gamma - gamma_a).abs()),
        fmt_sig(traj.max_norm_drift)
    ))
}

pub fn cmd_fig3(g: &GlobalArgs, a: &Fig3Args) -> CliResult<String> {
    let params = device(g)?;
    let cfg = integrator(g)?;
    let chi0 = chi0_from(a.chi0, a.gamma)?.unwrap_or(2.0 * PI / 3.0);
    let sign = if a.negative { -1.0 } else { 1.0 };
    for &tau in &a.taus {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(CliError::Usage(format!("durations must be positive, got {tau}")));
        }
    }
    let rows = a
        .taus
        .par_iter()
        .map(|&tau| fig3_point(&params, &cfg, chi0, sign * 2.0 * PI / tau))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(format!("{FIG3_HEADER}\n{}", rows.concat()))
}

/// Largest entrywise deviation between two equally sized blocks.
fn max_entry_error(u: &Unitary4, rows: std::ops::Range<usize>, target: [[f64; 2]; 2]) -> f64 {
    let mut worst: f64 = 0.0;
    for (bi, i) in rows.clone().enumerate() {
        for (bj, j) in rows.clone().enumerate() {
            worst = worst.max((u[(i, j)] - Complex64::new(target[bi][bj], 0.0)).norm());
        }
    }
    worst
}

fn xor_check() -> CliResult<String> {
    let u = xor_compose();
    let moduli = u.map(|z| Complex64::new(z.norm(), 0.0));
    let target = cnot();
    let modulus_error = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| (moduli[(i, j)] - target[(i, j)]).norm())
        .fold(0.0, f64::max);
    let report = Report::new()
        .text("gate", "xor")
        .number("unitarity_defect", unitarity_defect(&u))
        .number("fidelity_to_cnot_moduli", fidelity(&moduli, &target)?)
        .number("cnot_modulus_error", modulus_error)
        .number(
            "control0_block_error",
            max_entry_error(&u, 0..2, [[1.0, 0.0], [0.0, 1.0]]),
        )
        .number(
            "control1_block_error",
            max_entry_error(&u, 2..4, [[0.0, 1.0], [-1.0, 0.0]]),
        );
    Ok(annotated_table(&matrix_table(&u), &report))
}

fn p1_check(a: &GatesArgs, seed: u64) -> CliResult<String> {
    if a.draws == 0 {
        return Err(CliError::Usage("--draws must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..a.draws {
        let eta = rng.gen_range(0.0..PI);
        let theta_i = rng.gen_range(0.0..PI);
        let gamma = rng.gen_range(0.0..2.0 * PI);
        let basis = CyclicBasis::from_angles(theta_i, 0.0, eta);
        worst = worst.max((measure_p1(&basis, gamma) - measure_p1_closed(eta, theta_i, gamma)).abs());
    }
    Ok(Report::new()
        .text("check", "p1")
        .text("draws", a.draws)
        .text("seed", seed)
        .number("max_difference", worst)
        .render())
}

fn annotated_table(table: &str, report: &Report) -> String {
    let mut out = table.to_string();
    for line in report.render().lines() {
        let _ = writeln!(out, "# {line}");
    }
    out
}

fn named_gate(name: &str, a: &GatesArgs) -> CliResult<String> {
    let base = Report::new().text("gate", name);
    let (table, report) = match name {
        "u1" => {
            let u = u1_sq(a.gamma);
            (
                matrix_table(&u),
                base.number("gamma", a.gamma)
                    .number("unitarity_defect", unitarity_defect(&u)),
            )
        }
        "u2" => {
            let u = u2_sq(a.gamma);
            (
                matrix_table(&u),
                base.number("gamma", a.gamma)
                    .number("unitarity_defect", unitarity_defect(&u)),
            )
        }
        "cyclic" => {
            let u = cyclic_gate(a.gamma, a.theta_i, a.phi_i);
            let report = base
                .number("gamma", a.gamma)
                .number("theta_i", a.theta_i)
                .number("phi_i", a.phi_i)
                .number("unitarity_defect", unitarity_defect(&u));
            (matrix_table(&u), report)
        }
        "conditional" => {
            let u = conditional_gate(a.gamma0, a.gamma1);
            let report = base
                .number("gamma0", a.gamma0)
                .number("gamma1", a.gamma1)
                .number("unitarity_defect", unitarity_defect(&u));
            (matrix_table(&u), report)
        }
        "xor" => return xor_check(),
        "cnot" => {
            let u = cnot();
            (matrix_table(&u), base.number("unitarity_defect", unitarity_defect(&u)))
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown gate `{other}`; known gates: {}",
                KNOWN_GATES.join(", ")
            )))
        }
    };
    Ok(annotated_table(&table, &report))
}

pub fn cmd_gates(g: &GlobalArgs, a: &GatesArgs) -> CliResult<String> {
    let selected = [
        a.gate.is_some(),
        a.xor_check,
        a.u1.is_some(),
        a.u2.is_some(),
        a.p1_check,
    ]
    .iter()
    .filter(|&&x| x)
    .count();
    if selected != 1 {
        return Err(CliError::Usage(format!(
            "choose exactly one of --gate, --xor-check, --u1, --u2, --p1-check; known gates: {}",
            KNOWN_GATES.join(", ")
        )));
    }
    if a.xor_check {
        return xor_check();
    }
    if a.p1_check {
        return p1_check(a, g.seed);
    }
    if let Some(gamma) = a.u1 {
        return named_gate("u1", &GatesArgs { gamma, ..a.clone() });
    }
    if let Some(gamma) = a.u2 {
        return named_gate("u2", &GatesArgs { gamma, ..a.clone() });
    }
    named_gate(a.gate.as_deref().unwrap_or_default(), a)
}

fn write_output(path: &Option<PathBuf>, text: &str) -> CliResult<()> {
    use std::io::Write;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// Runs a command and returns its primary output without writing it.
pub fn render(cli: &Cli) -> CliResult<String> {
    let g = &cli.global;
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(g, a),
        Command::Phases(a) => cmd_phases(g, a),
        Command::Calibrate(a) => cmd_calibrate(g, a),
        Command::Fig2(a) => cmd_fig2(g, a).map(|(summary, _)| summary),
        Command::Fig3(a) => cmd_fig3(g, a),
        Command::Gates(a) => cmd_gates(g, a),
    }
}

/// Runs a command and writes its outputs.
pub fn run(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    if let Command::Fig2(a) = &cli.command {
        let (summary, traces) = cmd_fig2(g, a)?;
        if let (Some(path), Some(text)) = (&a.traces, traces) {
            write_output(&Some(path.clone()), &text)?;
        }
        return write_output(&g.out, &summary);
    }
    let text = render(cli)?;
    write_output(&g.out, &text)
}
