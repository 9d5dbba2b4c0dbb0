//! Control schedules t ↦ (Φ(t), nₓᵉ(t)) over one operation of duration τ
//! (in units of τ₀).

use std::f64::consts::PI;

use crate::error::{Error, ParseErrorKind, Result};
use crate::qubit::{reduced_field, ControlPoint, ControlRate, DeviceParams};

/// Which family a [`Schedule`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    ProcessI,
    ProcessII,
    Tabulated,
}

/// Rectangular loop in (Φ, nₓᵉ): flux ramp at nₓᵉ = ½, gate ramp to nₓₘᵉ,
/// flux back to 0, gate back to ½; each leg takes τ/4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessIParams {
    pub phi_m: f64,
    pub nxm: f64,
    pub tau: f64,
}

impl ProcessIParams {
    /// Φₘ = 0.25, nₓₘᵉ = 0.20 with the given duration.
    pub fn reference(tau: f64) -> Self {
        Self {
            phi_m: 0.25,
            nxm: 0.20,
            tau,
        }
    }
}

/// Constant-χ₀ rotating drive: the field azimuth turns as −ωt while
/// B_z − ħω stays equal to E_J cot χ₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessIIParams {
    pub chi0: f64,
    /// Signed angular frequency in 1/τ₀.
    pub omega: f64,
}

impl ProcessIIParams {
    pub fn tau(&self) -> f64 {
        2.0 * PI / self.omega.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct RotatingDrive {
    chi0: f64,
    omega: f64,
    /// (E₁−E₂)/(E₁+E₂)
    asym: f64,
    /// E_ch/(E₁+E₂)
    ech: f64,
    /// Static B_z shift seen by the qubit, in units of E₁+E₂.
    bz_offset: f64,
}

impl RotatingDrive {
    /// πΦ as a continuous function of the field azimuth θ = ωt.
    fn flux_angle(&self, theta: f64) -> (f64, f64) {
        let inv_d = 1.0 / self.asym.abs();
        let (s, c) = theta.sin_cos();
        let r2 = c * c + s * s * inv_d * inv_d;
        // θ + arg[(cosθ + i sinθ/|D|) e^{−iθ}]; the real part is positive so
        // the correction stays in (−π/2, π/2) and u is continuous.
        let g = theta + (s * c * (inv_d - 1.0)).atan2(c * c + s * s * inv_d);
        let dg = inv_d / r2;
        let sign = self.asym.signum();
        (sign * g, sign * dg)
    }

    /// Reduced E_J and dE_J/dθ.
    fn josephson(&self, theta: f64) -> (f64, f64) {
        let inv_d2 = 1.0 / (self.asym * self.asym);
        let (s, c) = theta.sin_cos();
        let ej = 1.0 / (c * c + s * s * inv_d2).sqrt();
        (ej, -ej.powi(3) * s * c * (inv_d2 - 1.0))
    }

    fn cot_chi(&self) -> f64 {
        self.chi0.cos() / self.chi0.sin()
    }

    fn eval(&self, t: f64) -> ControlPoint {
        let theta = self.omega * t;
        let (u, _) = self.flux_angle(theta);
        let (ej, _) = self.josephson(theta);
        ControlPoint::new(
            u / PI,
            0.5 * (1.0 - (ej * self.cot_chi() + self.omega - self.bz_offset) / self.ech),
        )
    }

    fn rate(&self, t: f64) -> ControlRate {
        let theta = self.omega * t;
        let (_, du) = self.flux_angle(theta);
        let (_, dej) = self.josephson(theta);
        ControlRate {
            flux: self.omega * du / PI,
            gate_charge: -0.5 * self.omega * dej * self.cot_chi() / self.ech,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    ProcessI(ProcessIParams),
    ProcessII(RotatingDrive),
    Tabulated(Vec<(f64, ControlPoint)>),
}

/// A control curve on [0, τ].
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    tau: f64,
    shape: Shape,
}

/// Rectangle loop of process I.
pub fn process_i(p: ProcessIParams) -> Result<Schedule> {
    if !(p.tau.is_finite() && p.tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "process I duration must be positive, got {}",
            p.tau
        )));
    }
    if !(p.phi_m.is_finite() && p.nxm.is_finite()) {
        return Err(Error::InvalidParameter("process I corners must be finite".into()));
    }
    Ok(Schedule {
        tau: p.tau,
        shape: Shape::ProcessI(p),
    })
}

/// Constant-χ₀ drive of one period 2π/|ω|.
pub fn process_ii(params: &DeviceParams, p: ProcessIIParams) -> Result<Schedule> {
    process_ii_shifted(params, p, 0.0)
}

/// Process II built against a field whose z-component is shifted by
/// `bz_offset_uev` (μeV), so that χ₀ stays constant for the shifted field.
pub fn process_ii_shifted(params: &DeviceParams, p: ProcessIIParams, bz_offset_uev: f64) -> Result<Schedule> {
    if !(p.chi0 > 0.0 && p.chi0 < PI) {
        return Err(Error::InvalidParameter(format!(
            "chi0 must lie in (0, pi), got {}",
            p.chi0
        )));
    }
    if !(p.omega.is_finite() && p.omega != 0.0) {
        return Err(Error::InvalidParameter(format!(
            "omega must be finite and nonzero, got {}",
            p.omega
        )));
    }
    if params.is_symmetric() {
        return Err(Error::InvalidParameter(
            "process II needs an asymmetric SQUID (e1 != e2)".into(),
        ));
    }
    let r = params.reduced();
    Ok(Schedule {
        tau: p.tau(),
        shape: Shape::ProcessII(RotatingDrive {
            chi0: p.chi0,
            omega: p.omega,
            asym: r.asym,
            ech: r.ech,
            bz_offset: bz_offset_uev / params.energy_scale(),
        }),
    })
}

pub const TABULATED_HEADER: &str = "t,flux,gate_charge";

/// Parses a `t,flux,gate_charge` table into a piecewise-linear schedule.
pub fn parse_tabulated(text: &str) -> Result<Schedule> {
    let mut header_seen = false;
    let mut rows: Vec<(f64, ControlPoint)> = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            let normalized: String = line.chars().filter(|c| !c.is_whitespace()).collect();
            if normalized != TABULATED_HEADER {
                return Err(Error::Parse {
                    line: line_no,
                    kind: ParseErrorKind::Header {
                        expected: TABULATED_HEADER.into(),
                    },
                });
            }
            header_seen = true;
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                kind: ParseErrorKind::ColumnCount {
                    expected: 3,
                    found: cells.len(),
                },
            });
        }
        let mut vals = [0.0; 3];
        for (v, cell) in vals.iter_mut().zip(&cells) {
            *v = cell
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    kind: ParseErrorKind::NonNumeric {
                        cell: (*cell).to_string(),
                    },
                })?;
        }
        let [t, flux, q] = vals;
        match rows.last() {
            None if t != 0.0 => {
                return Err(Error::Parse {
                    line: line_no,
                    kind: ParseErrorKind::NonMonotoneTime { t, previous: 0.0 },
                })
            }
            Some(&(prev, _)) if t <= prev => {
                return Err(Error::Parse {
                    line: line_no,
                    kind: ParseErrorKind::NonMonotoneTime { t, previous: prev },
                })
            }
            _ => {}
        }
        rows.push((t, ControlPoint::new(flux, q)));
    }
    if !header_seen {
        return Err(Error::Parse {
            line: last_line.max(1),
            kind: ParseErrorKind::Header {
                expected: TABULATED_HEADER.into(),
            },
        });
    }
    if rows.len() < 2 {
        return Err(Error::Parse {
            line: last_line.max(1),
            kind: ParseErrorKind::TooFewRows { found: rows.len() },
        });
    }
    Schedule::from_samples(rows)
}

impl Schedule {
    /// Piecewise-linear schedule through `(t, control)` samples; the first
    /// sample must be at t = 0 and times must increase strictly.
    pub fn from_samples(rows: Vec<(f64, ControlPoint)>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a tabulated schedule needs at least 2 samples, got {}",
                rows.len()
            )));
        }
        if rows[0].0 != 0.0 || rows.windows(2).any(|w| w[1].0.is_nan() || w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter(
                "sample times must start at 0 and increase strictly".into(),
            ));
        }
        let tau = rows[rows.len() - 1].0;
        Ok(Self {
            tau,
            shape: Shape::Tabulated(rows),
        })
    }

    /// A control held fixed for `tau`.
    pub fn constant(tau: f64, cp: ControlPoint) -> Result<Self> {
        Self::from_samples(vec![(0.0, cp), (tau, cp)])
    }

    pub fn duration(&self) -> f64 {
        self.tau
    }

    pub fn kind(&self) -> ScheduleKind {
        match self.shape {
            Shape::ProcessI(_) => ScheduleKind::ProcessI,
            Shape::ProcessII(_) => ScheduleKind::ProcessII,
            Shape::Tabulated(_) => ScheduleKind::Tabulated,
        }
    }

    /// Whether the field returns to its starting value at t = τ.
    ///
    /// For tabulated schedules the endpoint controls are compared with flux
    /// taken modulo 2 (the exact period of the field), which for any
    /// asymmetric device is equivalent to comparing the endpoint fields.
    pub fn is_closed(&self) -> bool {
        match &self.shape {
            Shape::ProcessI(_) | Shape::ProcessII(_) => true,
            Shape::Tabulated(rows) => {
                let a = rows[0].1;
                let b = rows[rows.len() - 1].1;
                let dflux = (b.flux - a.flux) / 2.0;
                (dflux - dflux.round()).abs() * 2.0 < 1e-9 && (b.gate_charge - a.gate_charge).abs() < 1e-9
            }
        }
    }

    /// Compares the endpoint fields of `params` to relative precision 1e-9.
    pub fn is_closed_for(&self, params: &DeviceParams) -> bool {
        let (Ok(a), Ok(b)) = (self.eval(0.0), self.eval(self.tau)) else {
            return false;
        };
        let (fa, fb) = (reduced_field(params, a), reduced_field(params, b));
        let d = ((fa.bx - fb.bx).powi(2) + (fa.by - fb.by).powi(2) + (fa.bz - fb.bz).powi(2)).sqrt();
        d <= 1e-9 * fa.magnitude().max(fb.magnitude()).max(1e-300)
    }

    /// Interior times where the control curve has a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::ProcessI(p) => vec![0.25 * p.tau, 0.5 * p.tau, 0.75 * p.tau],
            Shape::ProcessII(_) => Vec::new(),
            Shape::Tabulated(rows) => rows[1..rows.len() - 1].iter().map(|r| r.0).collect(),
        }
    }

    fn check_range(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.tau.max(1.0);
        if !(t >= -slack && t <= self.tau + slack) {
            return Err(Error::OutOfRange { t, duration: self.tau });
        }
        Ok(t.clamp(0.0, self.tau))
    }

    /// Control point at time `t` (τ₀ units).
    pub fn eval(&self, t: f64) -> Result<ControlPoint> {
        let t = self.check_range(t)?;
        Ok(match &self.shape {
            Shape::ProcessI(p) => process_i_eval(p, t),
            Shape::ProcessII(d) => d.eval(t),
            Shape::Tabulated(rows) => {
                let k = segment_index(rows, t);
                let (t0, a) = rows[k];
                let (t1, b) = rows[k + 1];
                let w = (t - t0) / (t1 - t0);
                ControlPoint::new(
                    a.flux + w * (b.flux - a.flux),
                    a.gate_charge + w * (b.gate_charge - a.gate_charge),
                )
            }
        })
    }

    /// Time derivative of the control; at a kink the right derivative.
    pub fn rate(&self, t: f64) -> Result<ControlRate> {
        let t = self.check_range(t)?;
        Ok(match &self.shape {
            Shape::ProcessI(p) => {
                let v = 4.0 / p.tau;
                match process_i_segment(p, t) {
                    0 => ControlRate {
                        flux: v * p.phi_m,
                        gate_charge: 0.0,
                    },
                    1 => ControlRate {
                        flux: 0.0,
                        gate_charge: v * (p.nxm - 0.5),
                    },
                    2 => ControlRate {
                        flux: -v * p.phi_m,
                        gate_charge: 0.0,
                    },
                    _ => ControlRate {
                        flux: 0.0,
                        gate_charge: v * (0.5 - p.nxm),
                    },
                }
            }
            Shape::ProcessII(d) => d.rate(t),
            Shape::Tabulated(rows) => {
                let k = segment_index(rows, t);
                let (t0, a) = rows[k];
                let (t1, b) = rows[k + 1];
                ControlRate {
                    flux: (b.flux - a.flux) / (t1 - t0),
                    gate_charge: (b.gate_charge - a.gate_charge) / (t1 - t0),
                }
            }
        })
    }

    /// Process II parameters, when this schedule is a process II drive.
    pub fn process_ii_params(&self) -> Option<ProcessIIParams> {
        match &self.shape {
            Shape::ProcessII(d) => Some(ProcessIIParams {
                chi0: d.chi0,
                omega: d.omega,
            }),
            _ => None,
        }
    }
}

fn process_i_segment(p: &ProcessIParams, t: f64) -> usize {
    ((4.0 * t / p.tau).floor() as usize).min(3)
}

fn process_i_eval(p: &ProcessIParams, t: f64) -> ControlPoint {
    let s = t / p.tau;
    match process_i_segment(p, t) {
        0 => ControlPoint::new(4.0 * p.phi_m * s, 0.5),
        1 => ControlPoint::new(p.phi_m, 0.5 + 4.0 * (p.nxm - 0.5) * (s - 0.25)),
        2 => ControlPoint::new(-4.0 * p.phi_m * s + 3.0 * p.phi_m, p.nxm),
        _ => ControlPoint::new(0.0, p.nxm + 4.0 * (0.5 - p.nxm) * (s - 0.75)),
    }
}

/// Index k of the interval [t_k, t_{k+1}) holding `t` (last interval closed).
fn segment_index(rows: &[(f64, ControlPoint)], t: f64) -> usize {
    let k = rows.partition_point(|r| r.0 <= t);
    k.saturating_sub(1).min(rows.len() - 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{effective_field, josephson_energy, mixing_angle};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn process_i_corners() {
        let s = process_i(ProcessIParams::reference(8.0)).unwrap();
        assert_eq!(s.eval(0.0).unwrap(), ControlPoint::new(0.0, 0.5));
        assert_eq!(s.eval(8.0).unwrap(), ControlPoint::new(0.0, 0.5));
        assert_eq!(s.eval(2.0).unwrap(), ControlPoint::new(0.25, 0.5));
        let mid3 = s.eval(5.0).unwrap();
        assert_relative_eq!(mid3.flux, 0.125, epsilon = 1e-15);
        assert_relative_eq!(mid3.gate_charge, 0.20, epsilon = 1e-15);
        let c2 = s.eval(4.0).unwrap();
        assert_relative_eq!(c2.gate_charge, 0.20, epsilon = 1e-15);
        assert_eq!(c2.flux, 0.25);
        let c3 = s.eval(6.0).unwrap();
        assert_relative_eq!(c3.flux, 0.0, epsilon = 1e-15);
        assert!(s.is_closed());
        assert_eq!(s.breakpoints(), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn process_i_is_continuous_rectangle() {
        let p = ProcessIParams::reference(1.0);
        let s = process_i(p).unwrap();
        for &b in &s.breakpoints() {
            let l = s.eval(b - 1e-12).unwrap();
            let r = s.eval(b).unwrap();
            assert!((l.flux - r.flux).abs() < 1e-10 && (l.gate_charge - r.gate_charge).abs() < 1e-10);
        }
        for k in 0..=400 {
            let cp = s.eval(k as f64 / 400.0).unwrap();
            let on_edge = cp.flux.abs() < 1e-12
                || (cp.flux - p.phi_m).abs() < 1e-12
                || (cp.gate_charge - 0.5).abs() < 1e-12
                || (cp.gate_charge - p.nxm).abs() < 1e-12;
            assert!(on_edge, "{cp:?}");
        }
    }

    #[test]
    fn out_of_range_rejected() {
        let s = process_i(ProcessIParams::reference(1.0)).unwrap();
        assert!(matches!(s.eval(1.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(s.eval(-0.1), Err(Error::OutOfRange { .. })));
        assert!(matches!(s.rate(f64::NAN), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn process_ii_starts_on_chi0() {
        let p = DeviceParams::reference();
        let chi0 = 2.0 * PI / 3.0;
        let omega = 1.3;
        let s = process_ii(&p, ProcessIIParams { chi0, omega }).unwrap();
        let cp = s.eval(0.0).unwrap();
        assert_eq!(cp.flux, 0.0);
        let b = effective_field(&p, cp);
        let hw = omega * p.energy_scale();
        assert_relative_eq!(
            b.bz,
            josephson_energy(&p, 0.0) * chi0.cos() / chi0.sin() + hw,
            epsilon = 1e-12
        );
        assert_relative_eq!(s.duration(), 2.0 * PI / 1.3, epsilon = 1e-15);
    }

    #[test]
    fn process_ii_rejects_bad_parameters() {
        let p = DeviceParams::reference();
        assert!(process_ii(&p, ProcessIIParams { chi0: 0.0, omega: 1.0 }).is_err());
        assert!(process_ii(&p, ProcessIIParams { chi0: 1.0, omega: 0.0 }).is_err());
        let sym = DeviceParams::new(2.0, 2.0, 20.0).unwrap();
        assert!(process_ii(&sym, ProcessIIParams { chi0: 1.0, omega: 1.0 }).is_err());
        // chi0 = pi/2 is a valid drive (only calibration is singular there)
        assert!(process_ii(
            &p,
            ProcessIIParams {
                chi0: PI / 2.0,
                omega: 1.0
            }
        )
        .is_ok());
    }

    #[test]
    fn process_ii_rate_matches_finite_difference() {
        let p = DeviceParams::reference();
        for omega in [0.7, -2.1] {
            let s = process_ii(&p, ProcessIIParams { chi0: 1.1, omega }).unwrap();
            let h = 1e-6;
            for k in 1..20 {
                let t = s.duration() * k as f64 / 20.0;
                let (a, b) = (s.eval(t + h).unwrap(), s.eval(t - h).unwrap());
                let r = s.rate(t).unwrap();
                assert!(((a.flux - b.flux) / (2.0 * h) - r.flux).abs() < 1e-7);
                assert!(((a.gate_charge - b.gate_charge) / (2.0 * h) - r.gate_charge).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn tabulated_constant_schedule() {
        let s = parse_tabulated("t,flux,gate_charge\n0,0,0.5\n10,0,0.5\n").unwrap();
        assert_eq!(s.kind(), ScheduleKind::Tabulated);
        assert!(s.is_closed());
        assert_eq!(s.duration(), 10.0);
        assert_eq!(s.eval(3.3).unwrap(), ControlPoint::new(0.0, 0.5));
    }

    #[test]
    fn tabulated_comments_and_crlf() {
        let text = "# a comment\r\nt, flux, gate_charge\r\n# mid\r\n0,0,0.5\r\n2,0.5,0.5\r\n4,0,0.25\r\n";
        let s = parse_tabulated(text).unwrap();
        assert!(!s.is_closed());
        assert!(!s.is_closed_for(&DeviceParams::reference()));
        assert_eq!(s.breakpoints(), vec![2.0]);
        let cp = s.eval(3.0).unwrap();
        assert_relative_eq!(cp.flux, 0.25, epsilon = 1e-15);
        assert_relative_eq!(cp.gate_charge, 0.375, epsilon = 1e-15);
    }

    #[test]
    fn tabulated_flux_wrap_is_closed() {
        let s = parse_tabulated("t,flux,gate_charge\n0,0,0.3\n1,1,0.3\n2,2,0.3\n").unwrap();
        assert!(s.is_closed());
        assert!(s.is_closed_for(&DeviceParams::reference()));
        let half = parse_tabulated("t,flux,gate_charge\n0,0,0.3\n1,1,0.3\n").unwrap();
        assert!(!half.is_closed());
        assert!(!half.is_closed_for(&DeviceParams::reference()));
    }

    #[test]
    fn tabulated_errors_name_the_line() {
        let backwards = "t,flux,gate_charge\n0,0,0.5\n2,0,0.5\n1,0,0.5\n";
        match parse_tabulated(backwards) {
            Err(Error::Parse {
                line: 4,
                kind: ParseErrorKind::NonMonotoneTime { .. },
            }) => {}
            other => panic!("{other:?}"),
        }
        match parse_tabulated("t,flux,gate_charge\n0,0,0.5\n") {
            Err(Error::Parse {
                kind: ParseErrorKind::TooFewRows { found: 1 },
                ..
            }) => {}
            other => panic!("{other:?}"),
        }
        match parse_tabulated("t,flux,gate_charge\n0,0,0.5\n1,abc,0.5\n") {
            Err(Error::Parse {
                line: 3,
                kind: ParseErrorKind::NonNumeric { cell },
            }) => assert_eq!(cell, "abc"),
            other => panic!("{other:?}"),
        }
        match parse_tabulated("time,x,y\n0,0,0\n1,0,0\n") {
            Err(Error::Parse {
                line: 1,
                kind: ParseErrorKind::Header { .. },
            }) => {}
            other => panic!("{other:?}"),
        }
        match parse_tabulated("t,flux,gate_charge\n0,0\n") {
            Err(Error::Parse {
                line: 2,
                kind: ParseErrorKind::ColumnCount { expected: 3, found: 2 },
            }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tabulated_process_i_interpolation() {
        let p = ProcessIParams::reference(100.0);
        let exact = process_i(p).unwrap();
        let n = 1000;
        let mut text = String::from("t,flux,gate_charge\n");
        for k in 0..=n {
            let t = p.tau * k as f64 / n as f64;
            let cp = exact.eval(t).unwrap();
            text.push_str(&format!("{t},{},{}\n", cp.flux, cp.gate_charge));
        }
        let tab = parse_tabulated(&text).unwrap();
        assert!(tab.is_closed());
        for k in 0..=3333 {
            let t = p.tau * k as f64 / 3333.0;
            let (a, b) = (exact.eval(t).unwrap(), tab.eval(t).unwrap());
            assert!((a.flux - b.flux).abs() <= 1e-4 && (a.gate_charge - b.gate_charge).abs() <= 1e-4);
        }
    }

    proptest! {
        #[test]
        fn process_ii_keeps_chi_constant_and_azimuth_linear(
            chi0 in 0.05f64..3.09,
            omega in prop_oneof![-5.0f64..-0.01, 0.01f64..5.0],
            frac in 0.0f64..1.0,
        ) {
            let p = DeviceParams::reference();
            let s = process_ii(&p, ProcessIIParams { chi0, omega }).unwrap();
            let t = frac * s.duration();
            let cp = s.eval(t).unwrap();
            let b = effective_field(&p, cp).scaled(1.0 / p.energy_scale());
            let chi = b.transverse().atan2(b.bz - omega);
            prop_assert!((chi - chi0).abs() < 1e-12);
            // field azimuth is −ωt, i.e. α(t) = ωt (mod 2π)
            let alpha = mixing_angle(&p, cp.flux);
            let d = (alpha - omega * t).rem_euclid(2.0 * PI);
            prop_assert!(d.min(2.0 * PI - d) < 1e-10);
        }

        #[test]
        fn process_ii_flux_is_continuous(chi0 in 0.1f64..3.0, omega in 0.1f64..3.0) {
            let p = DeviceParams::reference();
            let s = process_ii(&p, ProcessIIParams { chi0, omega }).unwrap();
            let n = 2000;
            let mut prev = s.eval(0.0).unwrap().flux;
            for k in 1..=n {
                let f = s.eval(s.duration() * k as f64 / n as f64).unwrap().flux;
                prop_assert!((f - prev).abs() < 0.02);
                prev = f;
            }
            // one full turn of the field corresponds to two flux quanta
            prop_assert!((prev.abs() - 2.0).abs() < 1e-9);
            prop_assert!(s.is_closed_for(&p));
        }
    }
}
