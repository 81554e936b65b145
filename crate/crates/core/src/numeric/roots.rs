//! Bracketed root finding.

use crate::error::{Error, Result};

/// Find the point where a monotone predicate `f(s) <= target` switches from
/// true to false inside `[lo, hi]`, i.e. `sup{s : f(s) <= target}`.
///
/// Requires `f(lo) <= target < f(hi)`. Illinois-modified regula falsi steps
/// are used while the bracket shrinks fast enough, bisection otherwise.
pub fn upper_crossing<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    x_tol: f64,
    f_tol: f64,
) -> Result<f64> {
    let mut flo = f(lo) - target;
    let mut fhi = f(hi) - target;
    if !(flo <= 0.0 && fhi > 0.0) {
        return Err(Error::Numeric(format!(
            "root not bracketed on [{lo}, {hi}]: f(lo)-t={flo:e}, f(hi)-t={fhi:e}"
        )));
    }
    let mut side = 0i8;
    for _ in 0..400 {
        let width = hi - lo;
        if width <= x_tol * (1.0 + hi.abs()) {
            break;
        }
        let mut x = if flo < 0.0 {
            (lo * fhi - hi * flo) / (fhi - flo)
        } else {
            0.5 * (lo + hi)
        };
        if !(x > lo && x < hi) || !x.is_finite() {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x) - target;
        if fx.abs() <= f_tol && flo < 0.0 {
            return Ok(x);
        }
        if fx <= 0.0 {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        // keep progress guaranteed when regula falsi stalls on one side
        if hi - lo > 0.5 * width {
            let m = 0.5 * (lo + hi);
            let fm = f(m) - target;
            if fm <= 0.0 {
                lo = m;
                flo = fm;
            } else {
                hi = m;
                fhi = fm;
            }
        }
    }
    Ok(if flo.abs() < fhi.abs() { lo } else { hi })
}

/// Bisection for a decreasing function: returns `x` in `[lo, hi]` with
/// `f(x) ≈ target`.
pub fn decreasing_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, target: f64, x_tol: f64) -> Result<f64> {
    upper_crossing(|x| -f(x), lo, hi, -target, x_tol, 0.0)
}
