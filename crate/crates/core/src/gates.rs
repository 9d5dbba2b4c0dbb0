//! Single-qubit geometric gates, the conditional two-qubit phase gate,
//! the XOR composition and the readout probability.

use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;

use nalgebra::{DMatrix, Dim, Matrix, Matrix2, Matrix4, RawStorage};
use num_complex::Complex64;

use crate::error::{Error, ParseErrorKind, Result};
use crate::io::fmt_sig;
use crate::qubit::CyclicBasis;

pub type Unitary2 = Matrix2<Complex64>;
pub type Unitary4 = Matrix4<Complex64>;

/// Frobenius tolerance of the unitarity invariant.
pub const UNITARY_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cis(phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, phi)
}

/// [[cosγ, i sinγ], [i sinγ, cosγ]]
pub fn u1_sq(gamma: f64) -> Unitary2 {
    let (s, co) = gamma.sin_cos();
    Matrix2::new(c(co, 0.0), c(0.0, s), c(0.0, s), c(co, 0.0))
}

/// diag(1, e^{−2iγ})
pub fn u2_sq(gamma: f64) -> Unitary2 {
    Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), cis(-2.0 * gamma))
}

/// e^{iγ}|ψ₊⟩⟨ψ₊| + e^{−iγ}|ψ₋⟩⟨ψ₋| = cosγ·I + i sinγ·(n̂ᵢ·σ).
///
/// θᵢ = π/2, φᵢ = 0 gives [`u1_sq`]; θᵢ = 0 gives e^{iγ}·[`u2_sq`].
pub fn cyclic_gate(gamma: f64, theta_i: f64, varphi_i: f64) -> Unitary2 {
    let (s, co) = gamma.sin_cos();
    let (st, ct) = theta_i.sin_cos();
    let (nx, ny, nz) = (st * varphi_i.cos(), st * varphi_i.sin(), ct);
    let i_s = c(0.0, s);
    Matrix2::new(
        c(co, 0.0) + i_s * nz,
        i_s * c(nx, -ny),
        i_s * c(nx, ny),
        c(co, 0.0) - i_s * nz,
    )
}

/// diag(e^{−iγ⁰}, e^{iγ⁰}, e^{−iγ¹}, e^{iγ¹}) in the basis |00⟩, |01⟩, |10⟩, |11⟩.
pub fn conditional_gate(gamma0: f64, gamma1: f64) -> Unitary4 {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(
        cis(-gamma0),
        cis(gamma0),
        cis(-gamma1),
        cis(gamma1),
    ))
}

/// [I ⊗ U₁(π/4)] · U(0, 3π/2) · [I ⊗ U₁(π/4)]†
pub fn xor_compose() -> Unitary4 {
    let local: Unitary4 = Unitary2::identity().kronecker(&u1_sq(FRAC_PI_4));
    local * conditional_gate(0.0, 1.5 * std::f64::consts::PI) * local.adjoint()
}

pub fn cnot() -> Unitary4 {
    let one = c(1.0, 0.0);
    let mut m = Unitary4::zeros();
    m[(0, 0)] = one;
    m[(1, 1)] = one;
    m[(2, 3)] = one;
    m[(3, 2)] = one;
    m
}

/// ‖U†U − I‖_F
pub fn unitarity_defect<R: Dim, C: Dim, S: RawStorage<Complex64, R, C>>(u: &Matrix<Complex64, R, C, S>) -> f64 {
    let (n, m) = (u.nrows(), u.ncols());
    if n != m {
        return f64::INFINITY;
    }
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..n {
                s += u[(k, i)].conj() * u[(k, j)];
            }
            if i == j {
                s -= 1.0;
            }
            acc += s.norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn is_unitary<R: Dim, C: Dim, S: RawStorage<Complex64, R, C>>(u: &Matrix<Complex64, R, C, S>) -> bool {
    unitarity_defect(u) < UNITARY_TOL
}

/// |tr(U†V)|/N; equals 1 exactly when U and V agree up to a global phase.
pub fn fidelity<R1, C1, S1, R2, C2, S2>(
    u: &Matrix<Complex64, R1, C1, S1>,
    v: &Matrix<Complex64, R2, C2, S2>,
) -> Result<f64>
where
    R1: Dim,
    C1: Dim,
    S1: RawStorage<Complex64, R1, C1>,
    R2: Dim,
    C2: Dim,
    S2: RawStorage<Complex64, R2, C2>,
{
    let n = u.nrows();
    if u.ncols() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: u.ncols(),
        });
    }
    if v.nrows() != n || v.ncols() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: v.nrows().max(v.ncols()),
        });
    }
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            tr += u[(i, j)].conj() * v[(i, j)];
        }
    }
    Ok(tr.norm() / n as f64)
}

/// Probability of finding |1⟩ after the cyclic evolution:
/// |a₊ sin(θᵢ/2) + a₋ cos(θᵢ/2) e^{−2iγ}|².
pub fn measure_p1(basis: &CyclicBasis, gamma: f64) -> f64 {
    let (s, co) = (0.5 * basis.theta_i).sin_cos();
    let amp = basis.a_plus * s + basis.a_minus * co * cis(-2.0 * gamma);
    let p = amp.norm_sqr();
    check_probability(p);
    p
}

/// [1 − cos(η−θᵢ)cosθᵢ + sin(η−θᵢ)sinθᵢ cos2γ]/2, valid for φᵢ = 0.
pub fn measure_p1_closed(eta: f64, theta_i: f64, gamma: f64) -> f64 {
    let d = eta - theta_i;
    let p = 0.5 * (1.0 - d.cos() * theta_i.cos() + d.sin() * theta_i.sin() * (2.0 * gamma).cos());
    check_probability(p);
    p
}

fn check_probability(p: f64) {
    assert!((-1e-12..=1.0 + 1e-12).contains(&p), "probability {p} outside [0, 1]");
}

/// Row-major table with columns re, im per entry.
pub fn matrix_table<R: Dim, C: Dim, S: RawStorage<Complex64, R, C>>(m: &Matrix<Complex64, R, C, S>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .flat_map(|j| [fmt_sig(m[(i, j)].re), fmt_sig(m[(i, j)].im)])
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// Reads a table written by [`matrix_table`]. Lines starting with `#` are skipped.
pub fn parse_matrix_table(text: &str) -> Result<DMatrix<Complex64>> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums = line
            .split_whitespace()
            .map(|cell| {
                cell.parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    kind: ParseErrorKind::NonNumeric { cell: cell.into() },
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if nums.len() % 2 != 0 || rows.first().is_some_and(|r| r.len() * 2 != nums.len()) {
            return Err(Error::Parse {
                line: idx + 1,
                kind: ParseErrorKind::ColumnCount {
                    expected: rows.first().map_or(nums.len() + 1, |r| r.len() * 2),
                    found: nums.len(),
                },
            });
        }
        rows.push(nums.chunks(2).map(|p| c(p[0], p[1])).collect());
    }
    let n = rows.len();
    if n == 0 || rows[0].len() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: rows.first().map_or(0, Vec::len),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}
