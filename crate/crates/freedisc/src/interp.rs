//! Empirical harness for the interpolation inequality bounding intermediate
//! derivatives: for 2 <= l <= k-1 and gamma_l = (2k-1)(l-1)/(k-1),
//!
//! ```text
//!   eps^gamma_l ||u^(l)||^2_I  <=  R_k ( ||u'||^2_I + eps^(2k-1) ||u^(k)||^2_I
//!                                        + eps^gamma_l |I|^(-2(l-1)) ||u'||^2_I ).
//! ```
//!
//! The constant R_k is estimated as the max ratio over randomized test
//! functions (polynomials with exact rational norms, splines, sampled grids)
//! and reported, never asserted against theory. Each sample draws from its
//! own position in one seed-derived cipher stream, so enlarging the sample
//! count extends the case list without changing earlier cases.

use crate::error::{Error, Result};
use crate::grid::GridSignal;
use crate::piecewise::{Piece, PiecewiseFunction};
use crate::poly::Polynomial;
use crate::profile::MAX_K;
use crate::quadrature;
use crate::rational::{rat, Rational, Scalar};
use num_traits::Zero;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

/// Exponent gamma_l = (2k-1)(l-1)/(k-1).
pub fn gamma_ell(k: usize, ell: usize) -> f64 {
    (2 * k - 1) as f64 * (ell - 1) as f64 / (k - 1) as f64
}

/// A test function for the inequality, with the norm machinery its
/// representation supports.
#[derive(Debug, Clone)]
pub enum TestFunction {
    /// Exact rational norms by polynomial calculus.
    Poly(Polynomial<Rational>),
    /// Piecewise polynomial; norms by adaptive quadrature per piece.
    Spline(PiecewiseFunction),
    /// Sampled signal; norms by repeated forward differences.
    Grid(GridSignal),
}

impl TestFunction {
    /// Squared L2 norm of the order-`ell` derivative over [a, b].
    fn derivative_norm_sq(&self, ell: usize, a: f64, b: f64) -> Result<f64> {
        match self {
            TestFunction::Poly(p) => {
                let d = p.derivative_n(ell);
                let sq = d.mul_same_interval(&d);
                let anti = sq.antiderivative();
                let ra = Rational::from_float(a)
                    .ok_or_else(|| Error::validation("interval endpoint is not finite"))?;
                let rb = Rational::from_float(b)
                    .ok_or_else(|| Error::validation("interval endpoint is not finite"))?;
                Ok((anti.eval(&rb) - anti.eval(&ra)).to_f64())
            }
            TestFunction::Spline(u) => {
                let mut total = 0.0;
                for p in u.pieces() {
                    let lo = p.a.max(a);
                    let hi = p.b.min(b);
                    if lo < hi {
                        let d = p.poly.derivative_n(ell);
                        // Integrate at unit coefficient scale so the
                        // tolerance acts relatively and the norm scales
                        // exactly with the function (ratio covariance).
                        let s = d.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
                        if s == 0.0 {
                            continue;
                        }
                        let dn = d.scale(&(1.0 / s));
                        total += s
                            * s
                            * quadrature::integrate(
                                |t| {
                                    let v = dn.eval(&t);
                                    v * v
                                },
                                lo,
                                hi,
                                1e-10,
                            )?;
                    }
                }
                Ok(total)
            }
            TestFunction::Grid(g) => grid_derivative_norm_sq(g, ell, a, b),
        }
    }

    /// Largest |u'| sampled on [a, b] (exact per cell for grids).
    fn max_slope(&self, a: f64, b: f64) -> f64 {
        match self {
            TestFunction::Poly(p) => {
                let d = p.to_f64_poly().derivative();
                max_abs_sampled(|t| d.eval(&t), a, b)
            }
            TestFunction::Spline(u) => {
                let mut m = 0.0f64;
                for p in u.pieces() {
                    let lo = p.a.max(a);
                    let hi = p.b.min(b);
                    if lo < hi {
                        let d = p.poly.derivative();
                        m = m.max(max_abs_sampled(|t| d.eval(&t), lo, hi));
                    }
                }
                m
            }
            TestFunction::Grid(g) => {
                let (i0, i1) = match grid_index_range(g, a, b) {
                    Some(r) => r,
                    None => return 0.0,
                };
                let mut m = 0.0f64;
                for i in i0..i1 {
                    m = m.max(((g.values[i + 1] - g.values[i]) / g.h).abs());
                }
                m
            }
        }
    }
}

fn max_abs_sampled(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let n = 256;
    (0..=n)
        .map(|i| f(a + (b - a) * i as f64 / n as f64).abs())
        .fold(0.0f64, f64::max)
}

/// Node index range [i0, i1] of grid nodes lying inside [a, b].
fn grid_index_range(g: &GridSignal, a: f64, b: f64) -> Option<(usize, usize)> {
    let lo = ((a - g.t0) / g.h - 1e-9).ceil().max(0.0) as usize;
    let hi_f = ((b - g.t0) / g.h + 1e-9).floor();
    if hi_f < lo as f64 {
        return None;
    }
    let hi = (hi_f as usize).min(g.len() - 1);
    (lo <= hi).then_some((lo, hi))
}

fn grid_derivative_norm_sq(g: &GridSignal, ell: usize, a: f64, b: f64) -> Result<f64> {
    let (i0, i1) = grid_index_range(g, a, b)
        .ok_or_else(|| Error::validation("interval contains no grid nodes"))?;
    if i1 - i0 < ell {
        return Err(Error::numerics(format!(
            "interval holds {} nodes, too few for order-{ell} differences",
            i1 - i0 + 1
        )));
    }
    // Signed ell-fold forward-difference stencil.
    let mut stencil = vec![0.0f64; ell + 1];
    let mut binom = 1.0f64;
    for (j, slot) in stencil.iter_mut().enumerate() {
        *slot = if (ell - j) % 2 == 0 { binom } else { -binom };
        binom = binom * (ell - j) as f64 / (j + 1) as f64;
    }
    let hl = g.h.powi(ell as i32);
    let mut total = 0.0;
    for w in i0..=(i1 - ell) {
        let mut d = 0.0;
        for (j, cj) in stencil.iter().enumerate() {
            d += cj * g.values[w + j];
        }
        d /= hl;
        total += d * d;
    }
    Ok(total * g.h)
}

/// One instance of the inequality.
#[derive(Debug, Clone)]
pub struct InterpCase {
    pub k: usize,
    pub ell: usize,
    pub eps: f64,
    pub interval: (f64, f64),
    pub u: TestFunction,
}

impl InterpCase {
    fn validate(&self) -> Result<()> {
        if self.k < 3 || self.k > MAX_K {
            return Err(Error::validation(format!("interp needs 3 <= k <= {MAX_K}")));
        }
        if self.ell < 2 || self.ell > self.k - 1 {
            return Err(Error::validation("interp needs 2 <= ell <= k-1"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::validation("interp needs eps in (0, 1)"));
        }
        let (a, b) = self.interval;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::validation("interp interval must be finite with a < b"));
        }
        Ok(())
    }
}

/// Both sides of the inequality without the constant:
/// lhs = eps^gamma_l ||u^(l)||^2, rhs = ||u'||^2 + eps^(2k-1) ||u^(k)||^2
/// + eps^gamma_l |I|^(-2(l-1)) ||u'||^2.
pub fn interp_sides(case: &InterpCase) -> Result<(f64, f64)> {
    case.validate()?;
    let (a, b) = case.interval;
    let g = gamma_ell(case.k, case.ell);
    let n1 = case.u.derivative_norm_sq(1, a, b)?;
    let nl = case.u.derivative_norm_sq(case.ell, a, b)?;
    let nk = case.u.derivative_norm_sq(case.k, a, b)?;
    let lhs = case.eps.powf(g) * nl;
    let len = b - a;
    let rhs = n1
        + case.eps.powi(2 * case.k as i32 - 1) * nk
        + case.eps.powf(g) / len.powi(2 * (case.ell as i32 - 1)) * n1;
    Ok((lhs, rhs))
}

/// One evaluated case in an estimation run.
#[derive(Debug, Clone)]
pub struct CaseRecord {
    pub k: usize,
    pub ell: usize,
    pub eps: f64,
    pub interval_length: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// True when every sampled slope satisfies |u'|^2 <= 1/eps on I, the
    /// hypothesis of the localized form of the inequality.
    pub below_threshold: bool,
}

/// Estimation summary, serialized as {k, R_hat, samples, seed}.
#[derive(Debug, Clone, Serialize)]
pub struct InterpSummary {
    pub k: usize,
    #[serde(rename = "R_hat")]
    pub r_hat: f64,
    pub samples: usize,
    pub seed: u64,
}

impl InterpSummary {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Render records as CSV with columns k, ell, eps, interval, lhs, rhs, ratio.
pub fn records_to_csv(records: &[CaseRecord]) -> String {
    let mut out = String::from("k,ell,eps,interval_length,lhs,rhs,ratio\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.k, r.ell, r.eps, r.interval_length, r.lhs, r.rhs, r.ratio
        ));
    }
    out
}

pub fn save_records_csv(records: &[CaseRecord], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, records_to_csv(records))?;
    Ok(())
}

/// Words reserved per sample in the cipher stream; far above consumption.
const STREAM_STRIDE: u128 = 1 << 12;

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(index as u128 * STREAM_STRIDE);
    rng
}

fn random_rational_poly(k: usize, rng: &mut ChaCha8Rng) -> Result<Polynomial<Rational>> {
    let degree = rng.gen_range(2..=2 * k + 2);
    let coeffs: Vec<Rational> = (0..=degree)
        .map(|_| rat(rng.gen_range(-8i64..=8), rng.gen_range(1i64..=4)))
        .collect();
    let coeffs = if coeffs.iter().all(Rational::is_zero) { vec![rat(1, 2)] } else { coeffs };
    Polynomial::new(coeffs, rat(1, 2), rat(1, 2))
}

/// Degree-k spline on (0, 1): k-fold antiderivative of a random step.
fn random_spline(k: usize, rng: &mut ChaCha8Rng) -> Result<PiecewiseFunction> {
    let interior = rng.gen_range(3..=7);
    let mut xs = vec![0.0];
    for _ in 0..interior {
        xs.push(rng.gen_range(0.02..0.98));
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    xs.push(1.0);
    let mut polys: Vec<Polynomial<f64>> = xs
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let hw = 0.5 * (w[1] - w[0]);
            Polynomial::new(vec![rng.gen_range(-4.0..4.0)], mid, hw)
        })
        .collect::<Result<Vec<_>>>()?;
    for _ in 0..k {
        let mut val = 0.0;
        for (j, w) in xs.windows(2).enumerate() {
            let anti = polys[j].antiderivative();
            let mid = 0.5 * (w[0] + w[1]);
            let hw = 0.5 * (w[1] - w[0]);
            let shift = Polynomial::new(vec![val - anti.eval(&w[0])], mid, hw)?;
            let adjusted = anti.add_same_interval(&shift);
            val = adjusted.eval(&w[1]);
            polys[j] = adjusted;
        }
    }
    let pieces = xs
        .windows(2)
        .zip(polys)
        .map(|(w, p)| Piece::new(w[0], w[1], p))
        .collect::<Result<Vec<_>>>()?;
    PiecewiseFunction::new(pieces)
}

/// Node count for sampled test functions. Held moderate on purpose: the
/// ell-fold difference divides value rounding by h^ell, so very fine grids
/// drown the high-order derivative norms in float noise.
const GRID_NODES: usize = 4097;

fn random_grid(rng: &mut ChaCha8Rng) -> Result<GridSignal> {
    let terms: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(1.0..8.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let slope = rng.gen_range(-2.0..2.0);
    GridSignal::from_fn(0.0, 1.0, GRID_NODES, |t| {
        let mut v = slope * t;
        for &(a, f, phase) in &terms {
            v += a * (std::f64::consts::TAU * f * t + phase).sin();
        }
        v
    })
}

fn generate_case(k: usize, rng: &mut ChaCha8Rng) -> Result<(TestFunction, f64, (f64, f64))> {
    let eps = 10.0f64.powf(rng.gen_range(-4.0..0.0));
    let mut len = 10.0f64.powf(rng.gen_range(-3.0..0.0));
    let variant = rng.gen_range(0..3u32);
    if variant == 2 {
        // Sampled cases need enough nodes in the interval for the stencils.
        len = len.max(96.0 / (GRID_NODES - 1) as f64);
    }
    let left = rng.gen_range(0.0..(1.0 - len).max(1e-12));
    let interval = (left, left + len);
    let u = match variant {
        0 => TestFunction::Poly(random_rational_poly(k, rng)?),
        1 => TestFunction::Spline(random_spline(k, rng)?),
        _ => TestFunction::Grid(random_grid(rng)?),
    };
    Ok((u, eps, interval))
}

fn evaluate_sample(k: usize, seed: u64, index: usize) -> Result<Vec<CaseRecord>> {
    let mut rng = sample_rng(seed, index);
    let (u, eps, interval) = generate_case(k, &mut rng)?;
    let threshold = (1.0 / eps).sqrt();
    let below = u.max_slope(interval.0, interval.1) <= 0.99 * threshold;
    let mut records = Vec::with_capacity(k - 2);
    for ell in 2..k {
        let case = InterpCase { k, ell, eps, interval, u: u.clone() };
        let (lhs, rhs) = interp_sides(&case)?;
        let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
        records.push(CaseRecord {
            k,
            ell,
            eps,
            interval_length: interval.1 - interval.0,
            lhs,
            rhs,
            ratio,
            below_threshold: below,
        });
    }
    Ok(records)
}

/// Estimate R_k as the max ratio over `samples` random cases (all admissible
/// ell per case). Deterministic per seed; samples evaluate in parallel.
pub fn estimate_r_k(k: usize, samples: usize, seed: u64) -> Result<f64> {
    Ok(estimate_r_k_detailed(k, samples, seed)?.0)
}

/// As [`estimate_r_k`], also returning every evaluated case.
pub fn estimate_r_k_detailed(k: usize, samples: usize, seed: u64) -> Result<(f64, Vec<CaseRecord>)> {
    if k < 3 || k > MAX_K {
        return Err(Error::validation(format!("interp needs 3 <= k <= {MAX_K}")));
    }
    if samples == 0 {
        return Err(Error::validation("sample count must be at least 1"));
    }
    let nested: Vec<Vec<CaseRecord>> = (0..samples)
        .into_par_iter()
        .map(|i| evaluate_sample(k, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<CaseRecord> = nested.into_iter().flatten().collect();
    let r_hat = records.iter().fold(0.0f64, |m, r| m.max(r.ratio));
    if !r_hat.is_finite() {
        return Err(Error::numerics("estimated constant is not finite"));
    }
    Ok((r_hat, records))
}
