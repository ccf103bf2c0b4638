//! Bisection for monotone scalar equations.
//!
//! Every null-model solver in this crate reduces to the same problem: an
//! increasing continuous function of one knob (noise gain, spectral radius,
//! flip probability) must be driven to zero. Bisection is slow but immune to
//! the flat tails these objectives have, and 200 halvings are far more than
//! f64 resolution anyway.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// True unless `lo` is strictly below `hi`; NaN endpoints count as empty.
fn bracket_is_empty(lo: f64, hi: f64) -> bool {
    lo.partial_cmp(&hi) != Some(Ordering::Less)
}

/// Convergence is declared on the residual, not the interval: callers state
/// their tolerance in the units of the objective.
pub const DEFAULT_F_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Root of an increasing `f` on `[lo, hi]`, given the endpoint residuals
/// `f_lo <= 0 <= f_hi`. Stops when `|f| < f_tol`; exhausting `max_iter`
/// without meeting it means `f` is not the promised continuous increasing
/// function and is an error.
pub fn bisect_increasing(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    f_lo: f64,
    f_hi: f64,
    f_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    if bracket_is_empty(lo, hi) {
        return Err(Error::BracketFailure(format!("empty bracket [{lo}, {hi}]")));
    }
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::BracketFailure(format!(
            "no sign change on [{lo}, {hi}]: f = [{f_lo}, {f_hi}]"
        )));
    }
    if f_lo.abs() < f_tol {
        return Ok(lo);
    }
    if f_hi.abs() < f_tol {
        return Ok(hi);
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.abs() < f_tol {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::BracketFailure(format!(
        "no convergence to |f| < {f_tol} within {max_iter} bisections"
    )))
}

/// Bisection with geometric bracket expansion for increasing `f`.
///
/// If an endpoint has the wrong sign the interval is pushed outward in
/// doubling steps, at most `max_expand` times per side, before bisecting.
pub fn expand_and_bisect_increasing(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    f_tol: f64,
    max_iter: usize,
    max_expand: usize,
) -> Result<f64> {
    if bracket_is_empty(lo, hi) {
        return Err(Error::BracketFailure(format!("empty bracket [{lo}, {hi}]")));
    }
    let mut lo = lo;
    let mut hi = hi;
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    let width = hi - lo;

    let mut step = width;
    let mut used = 0;
    while f_lo > 0.0 {
        if used == max_expand {
            return Err(Error::BracketFailure(format!(
                "lower edge still positive after {max_expand} expansions (x = {lo})"
            )));
        }
        lo -= step;
        step *= 2.0;
        used += 1;
        f_lo = f(lo)?;
    }
    let mut step = width;
    let mut used = 0;
    while f_hi < 0.0 {
        if used == max_expand {
            return Err(Error::BracketFailure(format!(
                "upper edge still negative after {max_expand} expansions (x = {hi})"
            )));
        }
        hi += step;
        step *= 2.0;
        used += 1;
        f_hi = f(hi)?;
    }
    bisect_increasing(f, lo, hi, f_lo, f_hi, f_tol, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root() {
        let mut f = |x: f64| Ok(x * x * x - 8.0);
        let x = bisect_increasing(&mut f, 0.0, 10.0, -8.0, 992.0, 1e-12, 200).unwrap();
        assert!((x - 2.0).abs() < 1e-9);
    }

    #[test]
    fn accepts_endpoint_roots() {
        let mut f = |x: f64| Ok(x - 1.0);
        let x = bisect_increasing(&mut f, 1.0, 2.0, 0.0, 1.0, 1e-12, 200).unwrap();
        assert_eq!(x, 1.0);
    }

    #[test]
    fn expansion_reaches_distant_roots() {
        let mut calls = 0;
        let mut f = |x: f64| {
            calls += 1;
            Ok(x - 1000.0)
        };
        let x = expand_and_bisect_increasing(&mut f, -1.0, 1.0, 1e-9, 200, 60).unwrap();
        assert!((x - 1000.0).abs() < 1e-6);
        assert!(calls < 100);
    }

    #[test]
    fn expansion_budget_is_enforced() {
        let mut f = |x: f64| Ok(x - 1000.0);
        let err = expand_and_bisect_increasing(&mut f, -1.0, 1.0, 1e-9, 200, 3).unwrap_err();
        assert!(matches!(err, Error::BracketFailure(_)));
    }

    #[test]
    fn rejects_bracket_without_sign_change() {
        let mut f = |x: f64| Ok(x);
        let err = bisect_increasing(&mut f, 1.0, 2.0, 1.0, 2.0, 1e-9, 200).unwrap_err();
        assert!(matches!(err, Error::BracketFailure(_)));
    }

    #[test]
    fn reports_nonconvergence_on_discontinuity() {
        // Sign step at pi: bracket shrinks forever, residual never small.
        let mut f = |x: f64| Ok(if x < std::f64::consts::PI { -1.0 } else { 1.0 });
        let err = bisect_increasing(&mut f, 0.0, 4.0, -1.0, 1.0, 1e-9, 200).unwrap_err();
        assert!(matches!(err, Error::BracketFailure(_)));
    }

    #[test]
    fn propagates_eval_errors() {
        // Root at 0.75 forces the search into the erroring region.
        let mut f = |x: f64| {
            if x > 0.5 {
                Err(Error::NonFinite)
            } else {
                Ok(x - 0.75)
            }
        };
        assert!(bisect_increasing(&mut f, -1.0, 1.0, -1.75, 0.25, 1e-9, 200).is_err());
    }
}
