//! Bracketing root finders for the polynomials behind the explicit models.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]`, which must bracket a sign change.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoValidRoot(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Horner evaluation, coefficients from the highest degree down.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, c| acc * x + c)
}

/// Roots of a polynomial on `[lo, hi]` found by sampling `samples`
/// subintervals for sign changes and bisecting each, in increasing order.
/// Roots of even multiplicity are not detected.
pub fn real_roots(coeffs: &[f64], lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let f = |x| poly_eval(coeffs, x);
    let step = (hi - lo) / samples as f64;
    let mut out: Vec<f64> = Vec::new();
    for i in 0..samples {
        let a = lo + step * i as f64;
        let b = if i + 1 == samples { hi } else { a + step };
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            if out.last().is_none_or(|&r| (r - a).abs() > 1e-12) {
                out.push(a);
            }
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            if let Ok(r) = bisect(f, a, b, 1e-15) {
                out.push(r);
            }
        }
    }
    if f(hi) == 0.0 && out.last().is_none_or(|&r| (r - hi).abs() > 1e-12) {
        out.push(hi);
    }
    out
}
