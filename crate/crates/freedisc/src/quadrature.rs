//! Adaptive Simpson quadrature for the few integrals that are not computed
//! in exact rational arithmetic (composite integrands on spline pieces).

use crate::error::{Error, Result};

const MAX_DEPTH: usize = 48;

fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, fa, m, fm, flm);
    let right = simpson(m, fm, b, fb, frm);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::numerics(format!(
            "quadrature failed to converge on [{a}, {b}] (residual {err:e})"
        )));
    }
    let lv = adapt(f, a, fa, m, fm, flm, left, 0.5 * tol, depth + 1)?;
    let rv = adapt(f, m, fm, b, fb, frm, right, 0.5 * tol, depth + 1)?;
    Ok(lv + rv)
}

/// Integrate f over [a, b] to absolute tolerance `tol` (default 1e-10 when
/// nonpositive). Errors when the recursion depth cap is hit first.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::validation("quadrature endpoints must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    let tol = if tol > 0.0 { tol } else { 1e-10 };
    let (a, b, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    if !fa.is_finite() || !fb.is_finite() || !fm.is_finite() {
        return Err(Error::numerics("integrand is not finite on the interval"));
    }
    let whole = simpson(a, fa, b, fb, fm);
    Ok(sign * adapt(&f, a, fa, b, fb, fm, whole, tol, 0)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_is_exact() {
        let v = integrate(|t| t * t * t - 2.0 * t + 1.0, -1.0, 2.0, 1e-12).unwrap();
        // Antiderivative t^4/4 - t^2 + t evaluated at the endpoints.
        let exact = (4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
    }

    #[test]
    fn sine_matches_closed_form() {
        let v = integrate(|t| (std::f64::consts::PI * t).sin(), 0.0, 1.0, 1e-12).unwrap();
        let exact = 2.0 / std::f64::consts::PI;
        assert!((v - exact).abs() < 1e-11, "{v}");
    }

    #[test]
    fn reversed_interval_flips_sign() {
        let a = integrate(|t| t.exp(), 0.0, 1.0, 1e-11).unwrap();
        let b = integrate(|t| t.exp(), 1.0, 0.0, 1e-11).unwrap();
        assert!((a + b).abs() < 1e-13);
    }

    #[test]
    fn nonintegrable_singularity_errors() {
        assert!(integrate(|t| 1.0 / t, 0.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn kinked_integrand_converges() {
        let v = integrate(|t| t.abs(), -1.0, 2.0, 1e-11).unwrap();
        assert!((v - 2.5).abs() < 1e-10, "{v}");
    }
}
