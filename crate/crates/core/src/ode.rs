//! Dormand–Prince 5(4) integrator with step-size control and the
//! fourth-order continuous extension for output at arbitrary times.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on |h|; `f64::INFINITY` for none.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            max_step: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

/// Step statistics of one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (coef, k) in terms {
        let c = h * coef;
        for i in 0..N {
            out[i] += c * k[i];
        }
    }
    out
}

/// Integrates y' = f(t, y) from `t0` to `t1` (either direction).
///
/// `samples` must be ordered along the direction of integration and lie in
/// the closed interval between `t0` and `t1`; `on_sample(index, t, y)` is
/// called once per sample from the dense output. Returns the state at `t1`.
pub fn integrate<const N: usize, F, S>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: [f64; N],
    opts: &OdeOptions,
    samples: &[f64],
    mut on_sample: S,
) -> Result<([f64; N], OdeStats)>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(usize, f64, &[f64; N]),
{
    let mut stats = OdeStats::default();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut next = 0;
    let time_eps = 4.0 * f64::EPSILON * t0.abs().max(t1.abs()).max(1.0);

    while next < samples.len() && (samples[next] - t0).abs() <= time_eps {
        on_sample(next, samples[next], &y0);
        next += 1;
    }
    if span == 0.0 {
        for (i, &ts) in samples.iter().enumerate().skip(next) {
            on_sample(i, ts, &y0);
        }
        return Ok((y0, stats));
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.evaluations += 1;
    let mut h = dir * initial_step(&mut f, t, &y, &k1, opts, span).min(opts.max_step);
    stats.evaluations += 1;
    let mut last_rejected = false;

    loop {
        let remaining = (t1 - t) * dir;
        if remaining <= 0.0 {
            break;
        }
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepUnderflow { t });
        }
        let mut final_step = false;
        if h.abs() >= remaining || 1.01 * h.abs() >= remaining {
            h = dir * remaining;
            final_step = true;
        }
        if h.abs() < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let t_new = if final_step { t1 } else { t + h };
        let k6 = f(
            t_new,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t_new, &y_new);
        stats.evaluations += 6;

        let mut err_sq = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / N as f64).sqrt();

        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.2;
            last_rejected = true;
            continue;
        }

        if err <= 1.0 {
            stats.accepted += 1;
            if next < samples.len() {
                let mut r2 = [0.0; N];
                let mut r3 = [0.0; N];
                let mut r4 = [0.0; N];
                let mut r5 = [0.0; N];
                for i in 0..N {
                    r2[i] = y_new[i] - y[i];
                    r3[i] = h * k1[i] - r2[i];
                    r4[i] = r2[i] - h * k7[i] - r3[i];
                    r5[i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                while next < samples.len() {
                    let ts = samples[next];
                    if !final_step && (ts - t_new) * dir > time_eps {
                        break;
                    }
                    if (ts - t_new).abs() <= time_eps {
                        on_sample(next, ts, &y_new);
                    } else {
                        let th = ((ts - t) / h).clamp(0.0, 1.0);
                        let th1 = 1.0 - th;
                        let mut ys = [0.0; N];
                        for i in 0..N {
                            ys[i] = y[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
                        }
                        on_sample(next, ts, &ys);
                    }
                    next += 1;
                }
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            if final_step {
                break;
            }
            let mut fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).abs().min(opts.max_step) * dir;
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }
    Ok((y, stats))
}

/// Starting step size following Hairer, Nørsett & Wanner.
fn initial_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], f0: &[f64; N], opts: &OdeOptions, span: f64) -> f64
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = opts.abs_tol + opts.rel_tol * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (f0[i] / sc).powi(2);
    }
    d0 = (d0 / N as f64).sqrt();
    d1 = (d1 / N as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1 = axpy(y, h0, &[(1.0, f0)]);
    let f1 = f(t + h0, &y1);
    let mut d2 = 0.0;
    for i in 0..N {
        let sc = opts.abs_tol + opts.rel_tol * y[i].abs();
        d2 += ((f1[i] - f0[i]) / sc).powi(2);
    }
    d2 = (d2 / N as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}
