//! Discrete energies on grid signals: evaluation, gradients, minimization,
//! and transition detection.
//!
//! The energy of a signal u on spacing h is
//!
//! ```text
//!   sum_cells V(Du_i) h  +  c eps^(2k-1) sum_windows (D^k u_w)^2 h
//!                        +  lambda sum_nodes (u_i - g_i)^2 h,
//! ```
//!
//! with Du the forward difference per cell (so the kinked potential V is
//! evaluated once per cell) and D^k the k-fold forward difference over the
//! n-k interior windows; no ghost nodes, matching the free boundary of the
//! continuum problem. The minimizer runs a monotone Barzilai-Borwein warmup
//! and then Newton steps on the quadratic obtained by freezing the set of
//! saturated cells; when a unit Newton step keeps the saturation pattern, the
//! iterate is an exact stationary point of the kinked energy.

use crate::error::{Error, Result};
use crate::grid::GridSignal;
use crate::linsolve::BandedSpd;
use crate::profile::{calibrate_c_k, MAX_K};
use std::fmt;
use std::sync::Arc;

/// Relative half-width of the optional C1 smoothing of the potential kink.
const SMOOTHING_REL_WIDTH: f64 = 1e-6;

/// Cell potential: either the truncated quadratic min{a z^2, b/eps} or a
/// user-supplied envelope s -> f(s) applied as (1/eps) f(eps z^2).
#[derive(Clone)]
pub enum Potential {
    TruncatedQuadratic {
        a: f64,
        b: f64,
    },
    General {
        /// Slope of f at 0 (kept for threshold bookkeeping).
        alpha: f64,
        /// Plateau value lim f (kept for threshold bookkeeping).
        beta: f64,
        evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::TruncatedQuadratic { a, b } => {
                write!(f, "TruncatedQuadratic {{ a: {a}, b: {b} }}")
            }
            Potential::General { alpha, beta, .. } => {
                write!(f, "General {{ alpha: {alpha}, beta: {beta} }}")
            }
        }
    }
}

impl Potential {
    pub fn standard() -> Self {
        Potential::TruncatedQuadratic { a: 1.0, b: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = match self {
            Potential::TruncatedQuadratic { a, b } => (*a, *b),
            Potential::General { alpha, beta, .. } => (*alpha, *beta),
        };
        if !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::validation("potential needs positive finite coefficients"));
        }
        Ok(())
    }

    /// Slope magnitude where the quadratic branch meets the plateau.
    pub fn threshold(&self, eps: f64) -> f64 {
        match self {
            Potential::TruncatedQuadratic { a, b } => (b / (a * eps)).sqrt(),
            Potential::General { alpha, beta, .. } => (beta / (alpha * eps)).sqrt(),
        }
    }

    /// A cell is saturated when its slope sits on the plateau branch.
    fn saturated(&self, du: f64, eps: f64) -> bool {
        match self {
            Potential::TruncatedQuadratic { a, b } => a * du * du >= b / eps,
            Potential::General { alpha, beta, .. } => alpha * eps * du * du >= *beta,
        }
    }

    fn cell_value(&self, du: f64, eps: f64, smoothing: bool) -> f64 {
        match self {
            Potential::TruncatedQuadratic { a, b } => {
                let q = a * du * du;
                let cap = b / eps;
                if !smoothing {
                    return q.min(cap);
                }
                let w = SMOOTHING_REL_WIDTH * cap;
                if q <= cap - w {
                    q
                } else if q >= cap + w {
                    cap
                } else {
                    // C1 quadratic blend between the branches.
                    let r = cap + w - q;
                    cap - r * r / (4.0 * w)
                }
            }
            Potential::General { evaluator, .. } => evaluator(eps * du * du) / eps,
        }
    }

    /// d/d(du) of the cell value; at the exact kink the quadratic branch wins.
    fn cell_deriv(&self, du: f64, eps: f64, smoothing: bool) -> f64 {
        match self {
            Potential::TruncatedQuadratic { a, b } => {
                let q = a * du * du;
                let cap = b / eps;
                if !smoothing {
                    return if q <= cap { 2.0 * a * du } else { 0.0 };
                }
                let w = SMOOTHING_REL_WIDTH * cap;
                if q <= cap - w {
                    2.0 * a * du
                } else if q >= cap + w {
                    0.0
                } else {
                    2.0 * a * du * (cap + w - q) / (2.0 * w)
                }
            }
            Potential::General { evaluator, .. } => {
                let s = eps * du * du;
                let d = 1e-7 * (1.0 + s.abs());
                let fp = (evaluator(s + d) - evaluator((s - d).max(0.0))) / (d + (s - (s - d).max(0.0)));
                2.0 * du * fp
            }
        }
    }

    /// Curvature surrogate for the Newton model (nonnegative by construction).
    fn cell_curvature(&self, du: f64, eps: f64, smoothing: bool) -> f64 {
        match self {
            Potential::TruncatedQuadratic { a, b } => {
                let q = a * du * du;
                let cap = b / eps;
                if !smoothing {
                    return if q < cap { 2.0 * a } else { 0.0 };
                }
                let w = SMOOTHING_REL_WIDTH * cap;
                if q <= cap - w {
                    2.0 * a
                } else if q >= cap + w {
                    0.0
                } else {
                    2.0 * a * (cap + w - q) / (2.0 * w)
                }
            }
            Potential::General { evaluator, .. } => {
                let s = eps * du * du;
                let d = 1e-7 * (1.0 + s.abs());
                let fp = (evaluator(s + d) - evaluator((s - d).max(0.0))) / (d + (s - (s - d).max(0.0)));
                (2.0 * fp).max(0.0)
            }
        }
    }
}

/// Parameters of the grid energy.
#[derive(Debug, Clone)]
pub struct EnergyParams {
    pub k: usize,
    pub eps: f64,
    pub potential: Potential,
    /// Weight c on the eps^(2k-1) derivative penalty.
    pub derivative_weight: f64,
    /// Fidelity weight lambda (0 disables the data term).
    pub fidelity_weight: f64,
    pub fidelity_data: Option<GridSignal>,
}

impl EnergyParams {
    /// The unit-coefficient energy with no data term.
    pub fn standard(k: usize, eps: f64) -> Self {
        EnergyParams {
            k,
            eps,
            potential: Potential::standard(),
            derivative_weight: 1.0,
            fidelity_weight: 0.0,
            fidelity_data: None,
        }
    }

    pub fn denoising(k: usize, eps: f64, lambda: f64, data: GridSignal) -> Self {
        EnergyParams {
            k,
            eps,
            potential: Potential::standard(),
            derivative_weight: 1.0,
            fidelity_weight: lambda,
            fidelity_data: Some(data),
        }
    }

    /// Same parameters with the fidelity term removed.
    pub fn without_fidelity(&self) -> Self {
        let mut p = self.clone();
        p.fidelity_weight = 0.0;
        p.fidelity_data = None;
        p
    }

    fn validate(&self, u: &GridSignal) -> Result<()> {
        if self.k < 2 || self.k > MAX_K {
            return Err(Error::validation(format!("energy order k must be in 2..={MAX_K}")));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::validation("eps must be positive and finite"));
        }
        if !(self.derivative_weight > 0.0) || !self.derivative_weight.is_finite() {
            return Err(Error::validation("derivative weight must be positive"));
        }
        if !(self.fidelity_weight >= 0.0) || !self.fidelity_weight.is_finite() {
            return Err(Error::validation("fidelity weight must be nonnegative"));
        }
        self.potential.validate()?;
        if u.len() < 2 * self.k + 2 {
            return Err(Error::validation(format!(
                "grid of {} nodes cannot support order-{} stencils (need >= {})",
                u.len(),
                self.k,
                2 * self.k + 2
            )));
        }
        if self.fidelity_weight > 0.0 {
            match &self.fidelity_data {
                None => {
                    return Err(Error::validation("fidelity weight > 0 requires fidelity data"))
                }
                Some(g) => {
                    if g.len() != u.len()
                        || (g.h - u.h).abs() > 1e-12 * u.h
                        || (g.t0 - u.t0).abs() > 1e-12 * u.h.max(u.t0.abs())
                    {
                        return Err(Error::validation("fidelity data must share the signal's grid"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Signed k-fold forward-difference stencil coefficients (-1)^(k-j) C(k,j).
fn diff_stencil(k: usize) -> Vec<f64> {
    let mut c = vec![0.0; k + 1];
    let mut binom = 1.0f64;
    for (j, slot) in c.iter_mut().enumerate() {
        *slot = if (k - j) % 2 == 0 { binom } else { -binom };
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    c
}

fn eval_with(u: &GridSignal, p: &EnergyParams, smoothing: bool) -> f64 {
    let h = u.h;
    let v = &u.values;
    let n = v.len();
    let mut pot = 0.0;
    for i in 0..n - 1 {
        let du = (v[i + 1] - v[i]) / h;
        pot += p.potential.cell_value(du, p.eps, smoothing);
    }
    let stencil = diff_stencil(p.k);
    let hk = h.powi(p.k as i32);
    let wpen = p.derivative_weight * p.eps.powi(2 * p.k as i32 - 1);
    let mut pen = 0.0;
    for w in 0..n - p.k {
        let mut dk = 0.0;
        for (j, cj) in stencil.iter().enumerate() {
            dk += cj * v[w + j];
        }
        dk /= hk;
        pen += dk * dk;
    }
    let mut fid = 0.0;
    if p.fidelity_weight > 0.0 {
        let g = &p.fidelity_data.as_ref().unwrap().values;
        for i in 0..n {
            let d = v[i] - g[i];
            fid += d * d;
        }
    }
    (pot + wpen * pen + p.fidelity_weight * fid) * h
}

/// Total energy of the signal.
pub fn evaluate(u: &GridSignal, p: &EnergyParams) -> Result<f64> {
    p.validate(u)?;
    Ok(eval_with(u, p, false))
}

/// Energy split into its summands: below-threshold potential, saturated
/// (plateau) potential, derivative penalty, fidelity. The transition-energy
/// estimator used by experiments is `total - dirichlet_below - fidelity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub dirichlet_below: f64,
    pub saturated: f64,
    pub penalty: f64,
    pub fidelity: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.dirichlet_below + self.saturated + self.penalty + self.fidelity
    }

    /// Potential-plateau part plus the derivative penalty.
    pub fn transition_energy(&self) -> f64 {
        self.saturated + self.penalty
    }
}

pub fn energy_parts(u: &GridSignal, p: &EnergyParams) -> Result<EnergyParts> {
    p.validate(u)?;
    let h = u.h;
    let v = &u.values;
    let n = v.len();
    let mut below = 0.0;
    let mut sat = 0.0;
    for i in 0..n - 1 {
        let du = (v[i + 1] - v[i]) / h;
        let val = p.potential.cell_value(du, p.eps, false);
        if p.potential.saturated(du, p.eps) {
            sat += val;
        } else {
            below += val;
        }
    }
    let stencil = diff_stencil(p.k);
    let hk = h.powi(p.k as i32);
    let wpen = p.derivative_weight * p.eps.powi(2 * p.k as i32 - 1);
    let mut pen = 0.0;
    for w in 0..n - p.k {
        let mut dk = 0.0;
        for (j, cj) in stencil.iter().enumerate() {
            dk += cj * v[w + j];
        }
        dk /= hk;
        pen += dk * dk;
    }
    let mut fid = 0.0;
    if p.fidelity_weight > 0.0 {
        let g = &p.fidelity_data.as_ref().unwrap().values;
        for i in 0..n {
            let d = v[i] - g[i];
            fid += d * d;
        }
    }
    Ok(EnergyParts {
        dirichlet_below: below * h,
        saturated: sat * h,
        penalty: wpen * pen * h,
        fidelity: p.fidelity_weight * fid * h,
    })
}

fn grad_with(u: &GridSignal, p: &EnergyParams, smoothing: bool, out: &mut [f64]) {
    let h = u.h;
    let v = &u.values;
    let n = v.len();
    out.iter_mut().for_each(|g| *g = 0.0);
    for i in 0..n - 1 {
        let du = (v[i + 1] - v[i]) / h;
        let d = p.potential.cell_deriv(du, p.eps, smoothing);
        out[i] -= d;
        out[i + 1] += d;
    }
    let stencil = diff_stencil(p.k);
    let hk = h.powi(p.k as i32);
    let wpen = p.derivative_weight * p.eps.powi(2 * p.k as i32 - 1);
    for w in 0..n - p.k {
        let mut dk = 0.0;
        for (j, cj) in stencil.iter().enumerate() {
            dk += cj * v[w + j];
        }
        dk /= hk;
        let f = 2.0 * wpen * dk / hk * h;
        for (j, cj) in stencil.iter().enumerate() {
            out[w + j] += f * cj;
        }
    }
    if p.fidelity_weight > 0.0 {
        let g = &p.fidelity_data.as_ref().unwrap().values;
        for i in 0..n {
            out[i] += 2.0 * p.fidelity_weight * (v[i] - g[i]) * h;
        }
    }
}

/// Gradient of [`evaluate`] with respect to the nodal values. At cells whose
/// slope sits exactly on the potential kink the quadratic branch is used.
pub fn gradient(u: &GridSignal, p: &EnergyParams) -> Result<GridSignal> {
    p.validate(u)?;
    let mut out = vec![0.0; u.len()];
    grad_with(u, p, false, &mut out);
    GridSignal::new(u.t0, u.h, out)
}

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    /// Convergence target for the sup norm of the gradient.
    pub tolerance: f64,
    /// Cap on gradient-phase iterations.
    pub max_iter: usize,
    /// Minimize the C1-smoothed energy instead of the kinked one.
    pub smoothing: bool,
    /// Barzilai-Borwein iterations before the first Newton pass. The warmup
    /// dissipates the data term's initial spike; its length selects the basin,
    /// so reproducible experiments must pin it.
    pub warmup: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { tolerance: 1e-8, max_iter: 100_000, smoothing: false, warmup: 2000 }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub signal: GridSignal,
    pub energy: f64,
    /// Sup norm of the gradient at the returned iterate.
    pub grad_norm: f64,
    pub iterations: usize,
    pub newton_steps: usize,
    /// False when the iteration cap was hit before the tolerance.
    pub converged: bool,
    /// Energy after every accepted step; nonincreasing.
    pub energy_trace: Vec<f64>,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Newton model of the energy with the saturation pattern frozen: saturated
/// cells contribute a constant, the rest their quadratic branch; the penalty
/// and fidelity terms are already quadratic. Bandwidth k.
fn pattern_hessian(u: &GridSignal, p: &EnergyParams, smoothing: bool) -> BandedSpd {
    let h = u.h;
    let v = &u.values;
    let n = v.len();
    let mut hess = BandedSpd::zeros(n, p.k);
    for i in 0..n - 1 {
        let du = (v[i + 1] - v[i]) / h;
        let curv = p.potential.cell_curvature(du, p.eps, smoothing) / h;
        if curv > 0.0 {
            hess.add(i, i, curv);
            hess.add(i + 1, i + 1, curv);
            hess.add(i + 1, i, -curv);
        }
    }
    let stencil = diff_stencil(p.k);
    let w2 = 2.0 * p.derivative_weight * p.eps.powi(2 * p.k as i32 - 1) * h
        / h.powi(2 * p.k as i32);
    for w in 0..n - p.k {
        for (j, cj) in stencil.iter().enumerate() {
            for (j2, cj2) in stencil.iter().enumerate().take(j + 1) {
                hess.add(w + j, w + j2, w2 * cj * cj2);
            }
        }
    }
    if p.fidelity_weight > 0.0 {
        let d = 2.0 * p.fidelity_weight * h;
        for i in 0..n {
            hess.add(i, i, d);
        }
    }
    hess
}

fn saturation_pattern(u: &GridSignal, p: &EnergyParams) -> Vec<bool> {
    let h = u.h;
    u.values
        .windows(2)
        .map(|w| p.potential.saturated((w[1] - w[0]) / h, p.eps))
        .collect()
}

/// Minimize the energy from the given starting signal.
///
/// Requires a positive fidelity weight: without the data term the infimum is
/// degenerate (any constant is optimal and the gradient flow drifts).
pub fn minimize(u0: &GridSignal, p: &EnergyParams, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    p.validate(u0)?;
    if !(p.fidelity_weight > 0.0) {
        return Err(Error::validation("minimize requires fidelity weight > 0"));
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::validation("minimize tolerance must be positive"));
    }
    let smoothing = opts.smoothing;
    let n = u0.len();
    let mut u = u0.clone();
    let mut g = vec![0.0; n];
    let mut g_prev = vec![0.0; n];
    let mut x_prev = u.values.clone();
    grad_with(&u, p, smoothing, &mut g);
    let mut fx = eval_with(&u, p, smoothing);
    let mut trace = vec![fx];
    let scale = 1.0 + sup_norm(&g);
    let mut step = 1.0 / scale;
    let mut iters = 0usize;
    let mut newton_steps = 0usize;

    // Monotone BB warmup with Armijo backtracking.
    let mut bb_budget = opts.warmup.min(opts.max_iter);
    loop {
        for _ in 0..bb_budget {
            if sup_norm(&g) <= opts.tolerance {
                break;
            }
            iters += 1;
            if iters > 1 {
                let mut ss = 0.0;
                let mut sy = 0.0;
                let mut yy = 0.0;
                for i in 0..n {
                    let s = u.values[i] - x_prev[i];
                    let y = g[i] - g_prev[i];
                    ss += s * s;
                    sy += s * y;
                    yy += y * y;
                }
                step = if sy > 0.0 {
                    let bb = if iters % 2 == 0 { ss / sy } else { sy / yy };
                    bb.clamp(1e-16, 1e12)
                } else {
                    1.0 / scale
                };
            }
            x_prev.copy_from_slice(&u.values);
            g_prev.copy_from_slice(&g);
            let gg: f64 = g.iter().map(|v| v * v).sum();
            let mut t = step;
            let mut accepted = false;
            for _ in 0..60 {
                let mut cand = u.clone();
                for i in 0..n {
                    cand.values[i] -= t * g[i];
                }
                let fc = eval_with(&cand, p, smoothing);
                if fc <= fx - 1e-4 * t * gg {
                    u = cand;
                    fx = fc;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
            trace.push(fx);
            grad_with(&u, p, smoothing, &mut g);
        }

        if sup_norm(&g) <= opts.tolerance {
            break;
        }

        // Newton phase on the frozen saturation pattern.
        let mut newton_ok = false;
        for _ in 0..60 {
            let pattern = saturation_pattern(&u, p);
            let hess = pattern_hessian(&u, p, smoothing);
            let ldlt = match hess.ldlt(1e-14 * p.fidelity_weight * u.h) {
                Ok(l) => l,
                Err(_) => break,
            };
            grad_with(&u, p, smoothing, &mut g);
            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let d = ldlt.solve(&rhs);
            let slope: f64 = g.iter().zip(&d).map(|(gi, di)| gi * di).sum();
            if !(slope < 0.0) {
                break;
            }
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let mut cand = u.clone();
                for i in 0..n {
                    cand.values[i] += t * d[i];
                }
                let fc = eval_with(&cand, p, smoothing);
                if fc <= fx + 1e-4 * t * slope {
                    u = cand;
                    fx = fc;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
            newton_steps += 1;
            trace.push(fx);
            grad_with(&u, p, smoothing, &mut g);
            if t == 1.0 && saturation_pattern(&u, p) == pattern {
                // Unit step with a stable pattern: exact minimizer of the
                // active quadratic, hence a stationary point of the energy.
                newton_ok = true;
                break;
            }
        }
        if newton_ok || sup_norm(&g) <= opts.tolerance {
            break;
        }
        if iters >= opts.max_iter {
            break;
        }
        // Pattern kept moving: alternate another BB chunk and retry.
        bb_budget = 200.min(opts.max_iter - iters).max(1);
    }

    let grad_norm = sup_norm(&g);
    let converged = grad_norm <= opts.tolerance.max(1e-7 * (1.0 + fx.abs()));
    Ok(MinimizeResult {
        signal: u,
        energy: fx,
        grad_norm,
        iterations: iters,
        newton_steps,
        converged,
        energy_trace: trace,
    })
}

/// Maximal above-threshold slope intervals and per-interval jump estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionReport {
    /// Maximal above-threshold intervals (tau, sigma) in t coordinates,
    /// merged across gaps shorter than the merge gap.
    pub intervals: Vec<(f64, f64)>,
    /// u(sigma) - u(tau) per interval.
    pub jump_estimates: Vec<f64>,
    /// Total measure of cells strictly below the slope threshold (pre-merge).
    pub below_threshold_measure: f64,
}

/// Locate transition intervals: maximal runs of cells with |Du| at or above
/// the potential threshold, merged across gaps shorter than `merge_gap`
/// (default 2h: discrete slopes oscillate across the threshold at single
/// nodes).
pub fn detect_transitions(
    u: &GridSignal,
    p: &EnergyParams,
    merge_gap: Option<f64>,
) -> Result<TransitionReport> {
    p.validate(u)?;
    let gap = merge_gap.unwrap_or(2.0 * u.h);
    let h = u.h;
    let above: Vec<bool> = saturation_pattern(u, p);
    let below_cells = above.iter().filter(|s| !**s).count();

    // Maximal runs of above cells as (first, last) cell indices.
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, &s) in above.iter().enumerate() {
        match (s, start) {
            (true, None) => start = Some(i),
            (false, Some(st)) => {
                runs.push((st, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(st) = start {
        runs.push((st, above.len() - 1));
    }

    let mut merged: Vec<(usize, usize)> = Vec::new();
    for run in runs {
        match merged.last_mut() {
            Some(prev) if (run.0 - prev.1 - 1) as f64 * h < gap => prev.1 = run.1,
            _ => merged.push(run),
        }
    }

    let intervals: Vec<(f64, f64)> = merged.iter().map(|&(a, b)| (u.t(a), u.t(b + 1))).collect();
    let jump_estimates: Vec<f64> =
        merged.iter().map(|&(a, b)| u.values[b + 1] - u.values[a]).collect();
    Ok(TransitionReport {
        intervals,
        jump_estimates,
        below_threshold_measure: below_cells as f64 * h,
    })
}

/// Second-order free-discontinuity energy of a signal: the order-(k-1)
/// energy with unit potential and calibrated derivative weight, applied to
/// the forward-difference derivative signal.
pub fn bz_functional(u: &GridSignal, k: usize, eps: f64) -> Result<f64> {
    if k < 3 || k > MAX_K {
        return Err(Error::validation(format!("bz functional needs 3 <= k <= {MAX_K}")));
    }
    let c = calibrate_c_k(k - 1, 1.0)?;
    let v = u.derivative_signal()?;
    let p = EnergyParams {
        k: k - 1,
        eps,
        potential: Potential::standard(),
        derivative_weight: c,
        fidelity_weight: 0.0,
        fidelity_data: None,
    };
    evaluate(&v, &p)
}
