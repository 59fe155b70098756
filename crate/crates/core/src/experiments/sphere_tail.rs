//! `P(|u^T v| >= h)` for `v` uniform on the unit sphere of `R^n` and a fixed
//! unit vector `u`.
//!
//! `w = u^T v` has density proportional to `(1 - w^2)^{(n-3)/2}` on `[-1, 1]`,
//! so the tail is `int_h^1 (1 - w^2)^{(n-3)/2} dw / int_0^1 (same)`. Writing
//! the exponent as `(d-2)/2` with `d = n - 1` the intrinsic dimension of the
//! sphere gives the same ratio. After `w = sin(theta)` the integrand is the
//! smooth `cos(theta)^{n-2}`, also for `n = 2` where the `w` form is singular.

use std::f64::consts::FRAC_PI_2;

use crate::error::{HugError, Result};

pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// `n` is the ambient dimension, `n >= 2`.
pub fn sphere_tail_probability(h: f64, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&h) {
        return Err(HugError::InvalidParameter(format!("h must lie in [0, 1], got {h}")));
    }
    if n < 2 {
        return Err(HugError::InvalidParameter(format!("n must be at least 2, got {n}")));
    }
    let p = (n - 2) as i32;
    let g = |t: f64| t.cos().max(0.0).powi(p);
    let lower = h.asin();
    // absolute tolerance of the ratio: the denominator is at least 1 / n
    let tol = QUADRATURE_TOLERANCE / (2.0 * n as f64);
    let num = adaptive_simpson(&g, lower, FRAC_PI_2, tol);
    let den = adaptive_simpson(&g, 0.0, FRAC_PI_2, tol);
    Ok((num / den).clamp(0.0, 1.0))
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
