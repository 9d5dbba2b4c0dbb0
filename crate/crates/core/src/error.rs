use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time {t} is outside the schedule range [0, {duration}]")]
    OutOfRange { t: f64, duration: f64 },

    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: ParseErrorKind },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("field vanishes at t = {t}; its direction is undefined")]
    ZeroField { t: f64 },

    #[error("initial and final states are orthogonal; the Pancharatnam phase is undefined")]
    OrthogonalEndpoints,

    #[error("trajectory is not cyclic: |n(tau) - n(0)| = {residual:.3e} exceeds {tol:.1e}")]
    NonCyclic { residual: f64, tol: f64 },

    #[error("field passes through the south pole (B_z = -|B|) at t = {t}")]
    SouthPole { t: f64 },

    #[error("Bloch path undersampled near t = {t}: precession step {step:.3} rad >= pi/2; increase sample_count")]
    Undersampled { t: f64, step: f64 },

    #[error("Bloch path passes through the south pole at t = {t}; the connection is singular there")]
    PathThroughSouthPole { t: f64 },

    #[error("trajectory carries no state amplitudes (Bloch-only run)")]
    MissingStates,

    #[error("no sign change of the objective over [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("root finding did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// What went wrong while reading a tabulated or exported file.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("missing or malformed header, expected `{expected}`")]
    Header { expected: String },
    #[error("expected {expected} columns, found {found}")]
    ColumnCount { expected: usize, found: usize },
    #[error("non-numeric cell `{cell}`")]
    NonNumeric { cell: String },
    #[error("time {t} does not increase past the previous row ({previous})")]
    NonMonotoneTime { t: f64, previous: f64 },
    #[error("need at least 2 data rows, found {found}")]
    TooFewRows { found: usize },
    #[error("missing key `{key}`")]
    MissingKey { key: String },
    #[error("malformed line, expected key=value")]
    MalformedLine,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
