//! Adaptive Simpson quadrature and inversion of strictly increasing functions.

use crate::error::{BcpError, Result};

/// Absolute tolerance used for the time-change and drift integrals.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;
/// Recursion depth cap for [`adaptive_simpson`].
pub const DEFAULT_MAX_DEPTH: u32 = 48;
/// Maximum number of accepted subintervals before giving up.
const MAX_INTERVALS: usize = 1 << 20;

/// Integrates `f` over `[a, b]` with adaptive Simpson's rule and Richardson correction.
///
/// The tolerance is absolute and is split between subintervals as the recursion
/// descends. Fails with [`BcpError::NumericFailure`] if a non-finite integrand value
/// shows up or the interval budget is exhausted.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(BcpError::invalid("integration limits must be finite"));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let m = 0.5 * (lo + hi);
    let (flo, fm, fhi) = (f(lo), f(m), f(hi));
    let whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
    let mut state = SimpsonState { intervals: 0 };
    let v = state.recurse(&f, lo, hi, flo, fm, fhi, whole, tol.max(f64::MIN_POSITIVE), max_depth)?;
    Ok(sign * v)
}

struct SimpsonState {
    intervals: usize,
}

impl SimpsonState {
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        &mut self,
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        if !(fa.is_finite() && fm.is_finite() && fb.is_finite()) {
            return Err(BcpError::NumericFailure(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            if depth == 0 && delta.abs() > 15.0 * tol {
                return Err(BcpError::NumericFailure(format!(
                    "adaptive Simpson hit depth cap on [{a}, {b}] (error estimate {:.3e})",
                    delta.abs() / 15.0
                )));
            }
            self.intervals += 1;
            if self.intervals > MAX_INTERVALS {
                return Err(BcpError::NumericFailure(
                    "adaptive Simpson exceeded its interval budget".into(),
                ));
            }
            return Ok(left + right + delta / 15.0);
        }
        let l = self.recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let r = self.recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }
}

/// Solves `f(t) = target` for a strictly increasing `f` on `[lo, hi]`.
///
/// Bracketed bisection interleaved with secant steps; the secant proposal is only
/// accepted while it stays strictly inside the current bracket.
pub fn invert_increasing<F>(f: F, target: f64, lo: f64, hi: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a)? - target;
    let mut fb = f(b)? - target;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa > 0.0 || fb < 0.0 {
        return Err(BcpError::NumericFailure(format!(
            "target {target} not bracketed by [{lo}, {hi}]"
        )));
    }
    for iter in 0..200 {
        let width = b - a;
        if width <= rel_tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        let secant = a - fa * (b - a) / (fb - fa);
        let mid = 0.5 * (a + b);
        // Alternate: secant when it is well inside the bracket, otherwise bisect.
        let x = if iter % 3 != 2 && secant > a + 0.01 * width && secant < b - 0.01 * width {
            secant
        } else {
            mid
        };
        let fx = f(x)? - target;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    // Return the end closer in function value.
    Ok(if fa.abs() < fb.abs() { a } else { b })
}
