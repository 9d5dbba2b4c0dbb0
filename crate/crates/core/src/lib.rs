//! Simulation of a Josephson charge qubit steered around closed loops in
//! control space: time evolution, dynamic/geometric phase decomposition,
//! zero-dynamic-phase calibration, conditional gates and a coupled pair.

pub mod calibration;
pub mod coupled;
pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod gates;
pub mod io;
pub mod ode;
pub mod phases;
pub mod quadrature;
pub mod qubit;
pub mod schedule;
pub mod units;

pub use dynamics::{evolve_bloch, evolve_state, Drive, IntegratorConfig, ScheduledDrive, Trajectory};
pub use error::{Error, ParseErrorKind, Result};
pub use qubit::{BlochVector, ControlPoint, ControlRate, CyclicBasis, DeviceParams, FieldVector, SpinState};
pub use schedule::{process_i, process_ii, ProcessIIParams, ProcessIParams, Schedule, ScheduleKind};
