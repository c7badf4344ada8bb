//! Scalar minimization and root finding: golden-section search on an interval,
//! a log-spaced multistart wrapper for functions whose unimodality is not
//! guaranteed a priori, and bisection for monotone root finding.

use crate::error::{Error, Result};

const INVPHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5)-1)/2

/// Golden-section minimization of `f` on `[a, b]` to absolute bracket width `tol`.
/// Returns `(argmin, min)`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    if !(a < b) || !tol.is_finite() || tol <= 0.0 {
        return Err(Error::validation("golden_section: need a < b and tol > 0"));
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    // The midpoint can sit a hair above the best probed point; keep the better.
    if f1 < fx && f1 <= f2 {
        Ok((x1, f1))
    } else if f2 < fx {
        Ok((x2, f2))
    } else {
        Ok((x, fx))
    }
}

/// Minimize on `[a, b]` (both positive) by probing `seeds` log-spaced points,
/// then golden-section search on the log-neighborhood of the best probe.
pub fn multistart_log_golden<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    seeds: usize,
    tol: f64,
) -> Result<(f64, f64)> {
    if !(a > 0.0 && b > a) || seeds < 2 {
        return Err(Error::validation("multistart: need 0 < a < b and >= 2 seeds"));
    }
    let (la, lb) = (a.ln(), b.ln());
    let grid: Vec<f64> = (0..seeds)
        .map(|i| (la + (lb - la) * i as f64 / (seeds - 1) as f64).exp())
        .collect();
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (i, &x) in grid.iter().enumerate() {
        let v = f(x);
        if v < best_val {
            best_val = v;
            best = i;
        }
    }
    let lo = if best == 0 { grid[0] } else { grid[best - 1] };
    let hi = if best + 1 == seeds { grid[seeds - 1] } else { grid[best + 1] };
    if lo == hi {
        return Ok((lo, best_val));
    }
    golden_section(f, lo, hi, tol)
}

/// Bisection root of a continuous function with a sign change on `[a, b]`,
/// to relative bracket width `tol_rel`.
pub fn bisect_root<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol_rel: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a, b);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::numerics("bisect_root: no sign change on bracket"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
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
        if (hi - lo).abs() <= tol_rel * (lo.abs() + hi.abs()) * 0.5 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
