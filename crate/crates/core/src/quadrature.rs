//! Quadrature rules: composite Simpson on uniformly sampled data and
//! composite Gauss–Legendre with panel doubling for smooth integrands.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Composite Simpson rule over equally spaced samples with spacing `h`.
///
/// An odd number of intervals finishes with the 3/8 rule on the last three;
/// two samples fall back to the trapezoid rule.
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        3 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ => {
            let intervals = n - 1;
            let simpson_end = if intervals.is_multiple_of(2) { n - 1 } else { n - 4 };
            let mut acc = 0.0;
            let mut k = 0;
            while k < simpson_end {
                acc += values[k] + 4.0 * values[k + 1] + values[k + 2];
                k += 2;
            }
            let mut total = h / 3.0 * acc;
            if simpson_end != n - 1 {
                let v = &values[simpson_end..];
                total += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
            }
            total
        }
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

const GL_ORDER: usize = 10;

fn composite_gl<F>(f: &mut F, a: f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + width * p as f64;
        let mid = lo + 0.5 * width;
        let mut acc = 0.0;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            acc += w * f(mid + 0.5 * width * x)?;
        }
        total += 0.5 * width * acc;
    }
    Ok(total)
}

/// Integrates a smooth function on [a, b], doubling the number of
/// 10-point Gauss–Legendre panels until successive estimates agree to
/// `tol·max(1, |I|)`.
pub fn integrate_smooth<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let rule = gauss_legendre(GL_ORDER);
    let mut panels = 4;
    let mut prev = composite_gl(&mut f, a, b, panels, &rule)?;
    for _ in 0..16 {
        panels *= 2;
        let cur = composite_gl(&mut f, a, b, panels, &rule)?;
        if (cur - prev).abs() <= tol * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence { iterations: 16 })
}
