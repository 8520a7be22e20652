//! Bracketed scalar root finding.
//!
//! Every equation solved by this crate has a proven monotone structure on a
//! known bracket, so plain bisection always converges. A safeguarded Newton
//! variant is used where the derivative is cheap and many solves are needed
//! (the arms ODE right-hand side).

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]` for a function changing sign across the bracket.
///
/// `done(lo, hi)` decides termination; the midpoint of the final bracket is
/// returned.
pub fn bisect<F, S>(mut f: F, mut lo: f64, mut hi: f64, done: S, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
    S: Fn(f64, f64) -> bool,
{
    let flo = f(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || (flo > 0.0) == (fhi > 0.0) {
        return Err(Error::Solver(format!("no sign change on [{lo}, {hi}]: f = ({flo}, {fhi})")));
    }
    let lo_positive = flo > 0.0;
    for _ in 0..max_iter {
        if done(lo, hi) {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // bracket exhausted at machine resolution
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if done(lo, hi) {
        return Ok(0.5 * (lo + hi));
    }
    Err(Error::Solver(format!("bisection did not converge in {max_iter} iterations (bracket [{lo}, {hi}])")))
}

/// Absolute-width stopping rule.
pub fn width_below(tol: f64) -> impl Fn(f64, f64) -> bool {
    move |lo, hi| hi - lo <= tol
}

/// Width below `tol` relative to the bracket magnitude (absolute once the
/// magnitude exceeds one).
pub fn rel_width_below(tol: f64) -> impl Fn(f64, f64) -> bool {
    move |lo, hi| hi - lo <= tol * hi.abs().max(lo.abs()).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Newton's method kept inside a sign-change bracket; falls back to
/// bisection whenever a Newton step leaves the bracket or stalls.
///
/// `fdf` returns the function value and its derivative.
pub fn newton_bracketed<F>(
    mut fdf: F,
    mut lo: f64,
    mut hi: f64,
    guess: Option<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (flo, _) = fdf(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    let (fhi, _) = fdf(hi);
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || (flo > 0.0) == (fhi > 0.0) {
        return Err(Error::Solver(format!("no sign change on [{lo}, {hi}]: f = ({flo}, {fhi})")));
    }
    let lo_positive = flo > 0.0;
    let mut x = match guess {
        Some(g) if g > lo && g < hi => g,
        _ => 0.5 * (lo + hi),
    };
    let mut last_step = hi - lo;
    for _ in 0..max_iter {
        let (fx, dfx) = fdf(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == lo_positive {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let step;
        if dfx.is_finite() && dfx != 0.0 && newton > lo && newton < hi {
            step = (newton - x).abs();
            // a Newton step that fails to halve the previous one is replaced
            if step > 0.5 * last_step {
                x = 0.5 * (lo + hi);
                last_step = hi - lo;
            } else {
                x = newton;
                last_step = step;
            }
        } else {
            x = 0.5 * (lo + hi);
            last_step = hi - lo;
        }
        if last_step <= tol || hi - lo <= tol {
            return Ok(x);
        }
    }
    Err(Error::Solver(format!("safeguarded Newton did not converge in {max_iter} iterations (bracket [{lo}, {hi}])")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, width_below(1e-14), 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisection_handles_decreasing_functions() {
        let r = bisect(|x| 1.0 - x, 0.0, 3.0, width_below(1e-14), 200).unwrap();
        assert!((r - 1.0).abs() < 1e-13);
    }

    #[test]
    fn no_sign_change_is_an_error() {
        let e = bisect(|x| x * x + 1.0, -1.0, 1.0, width_below(1e-12), 100).unwrap_err();
        assert!(matches!(e, Error::Solver(_)));
    }

    #[test]
    fn relative_rule_resolves_tiny_roots() {
        let target = 3.0e-11;
        let r = bisect(|x| x - target, 0.0, 1.0, rel_width_below(1e-12), 200).unwrap();
        assert!((r - target).abs() <= 1e-12 * target);
    }

    #[test]
    fn newton_agrees_with_bisection() {
        let f = |x: f64| (x.cos() - x, -x.sin() - 1.0);
        let n = newton_bracketed(f, 0.0, 1.0, None, 1e-14, 100).unwrap();
        let b = bisect(|x| x.cos() - x, 0.0, 1.0, width_below(1e-15), 200).unwrap();
        assert!((n - b).abs() < 1e-13);
    }
}
