//! Piecewise-polynomial limit objects: the functions the grid energies
//! converge to, their limit energies, recovery sequences that realize those
//! energies on grids, and the second-order crease-counting energy.

use crate::error::{Error, Result};
use crate::grid::GridSignal;
use crate::poly::Polynomial;
use crate::profile::{hermite_profile, m_k_general, BoundarySpec, MAX_K};
use crate::quadrature;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One smooth piece: a polynomial on the closed interval [a, b].
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub poly: Polynomial<f64>,
}

impl Piece {
    pub fn new(a: f64, b: f64, poly: Polynomial<f64>) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::validation("piece needs finite endpoints with a < b"));
        }
        Ok(Piece { a, b, poly })
    }

    /// Constant-value piece.
    pub fn constant(a: f64, b: f64, value: f64) -> Result<Self> {
        let mid = 0.5 * (a + b);
        let hw = 0.5 * (b - a);
        Piece::new(a, b, Polynomial::new(vec![value], mid, hw)?)
    }
}

/// Value discontinuity with one-sided traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpPoint {
    pub t: f64,
    pub left: f64,
    pub right: f64,
}

impl JumpPoint {
    pub fn height(&self) -> f64 {
        self.right - self.left
    }
}

/// Derivative discontinuity with one-sided derivative traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CreasePoint {
    pub t: f64,
    pub dleft: f64,
    pub dright: f64,
}

/// Piecewise polynomial on an interval. Jumps and creases are derived from
/// the one-sided traces at the piece boundaries; a boundary with matching
/// traces is listed in neither table.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFunction {
    pieces: Vec<Piece>,
    jumps: Vec<JumpPoint>,
    creases: Vec<CreasePoint>,
}

#[derive(Serialize, Deserialize)]
struct PieceJson {
    a: f64,
    b: f64,
    kind: String,
    /// Raw monomial coefficients in t (constant term first).
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PiecewiseJson {
    pieces: Vec<PieceJson>,
    #[serde(default)]
    jumps: Vec<JumpPoint>,
    #[serde(default)]
    creases: Vec<CreasePoint>,
}

/// Trace mismatch below this relative scale counts as continuous.
const TRACE_TOL: f64 = 1e-12;

impl PiecewiseFunction {
    /// Build from contiguous pieces; jumps and creases are derived.
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::validation("piecewise function needs at least one piece"));
        }
        let span = pieces.last().unwrap().b - pieces[0].a;
        for w in pieces.windows(2) {
            if (w[1].a - w[0].b).abs() > 1e-9 * span.max(1.0) {
                return Err(Error::validation(format!(
                    "pieces are not contiguous at {} vs {}",
                    w[0].b, w[1].a
                )));
            }
        }
        let mut jumps = Vec::new();
        let mut creases = Vec::new();
        for w in pieces.windows(2) {
            let t = w[0].b;
            let left = w[0].poly.eval(&t);
            let right = w[1].poly.eval(&w[1].a);
            let scale = TRACE_TOL * (1.0 + left.abs() + right.abs());
            if (right - left).abs() > scale {
                jumps.push(JumpPoint { t, left, right });
            }
            let dleft = w[0].poly.derivative().eval(&t);
            let dright = w[1].poly.derivative().eval(&w[1].a);
            let dscale = TRACE_TOL * (1.0 + dleft.abs() + dright.abs());
            if (dright - dleft).abs() > dscale {
                creases.push(CreasePoint { t, dleft, dright });
            }
        }
        Ok(PiecewiseFunction { pieces, jumps, creases })
    }

    /// Single step: `left` on [a, t0], `right` on [t0, b].
    pub fn step(a: f64, b: f64, t0: f64, left: f64, right: f64) -> Result<Self> {
        if !(a < t0 && t0 < b) {
            return Err(Error::validation("step location must lie inside the open domain"));
        }
        PiecewiseFunction::new(vec![Piece::constant(a, t0, left)?, Piece::constant(t0, b, right)?])
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.pieces[0].a, self.pieces.last().unwrap().b)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn jumps(&self) -> &[JumpPoint] {
        &self.jumps
    }

    pub fn creases(&self) -> &[CreasePoint] {
        &self.creases
    }

    /// Index of the piece containing t, ties resolved to the right piece
    /// (so evaluation is right-continuous at interior breakpoints).
    fn piece_index(&self, t: f64) -> usize {
        let mut idx = self.pieces.len() - 1;
        for (i, p) in self.pieces.iter().enumerate() {
            if t < p.b {
                idx = i;
                break;
            }
        }
        idx
    }

    /// Right-continuous evaluation; at the right domain end, the last piece.
    pub fn eval(&self, t: f64) -> f64 {
        self.pieces[self.piece_index(t)].poly.eval(&t)
    }

    /// Dirichlet-plus-jump limit energy
    /// `a * int (u')^2 dt + jump_constant * sum |z|^(1/k)`.
    pub fn limit_energy(&self, a: f64, jump_constant: f64, k: usize) -> Result<f64> {
        if k == 0 || k > MAX_K {
            return Err(Error::validation(format!("limit energy order must be in 1..={MAX_K}")));
        }
        if !a.is_finite() || !jump_constant.is_finite() || a < 0.0 || jump_constant < 0.0 {
            return Err(Error::validation("limit energy weights must be finite and nonnegative"));
        }
        let mut dirichlet = 0.0;
        for p in &self.pieces {
            let d = p.poly.derivative();
            dirichlet += quadrature::integrate(|t| d.eval(&t) * d.eval(&t), p.a, p.b, 1e-10)?;
        }
        let jump_sum: f64 =
            self.jumps.iter().map(|j| j.height().abs().powf(1.0 / k as f64)).sum();
        Ok(a * dirichlet + jump_constant * jump_sum)
    }

    /// Second-order limit energy: bending plus counting terms,
    /// `int (u'')^2 dt + 2 * #jumps + #(creases not at jumps)`.
    pub fn blake_zisserman_energy(&self) -> Result<f64> {
        let mut bending = 0.0;
        for p in &self.pieces {
            let d2 = p.poly.derivative_n(2);
            bending += quadrature::integrate(|t| d2.eval(&t) * d2.eval(&t), p.a, p.b, 1e-10)?;
        }
        let jump_ts: Vec<f64> = self.jumps.iter().map(|j| j.t).collect();
        let pure_creases = self
            .creases
            .iter()
            .filter(|c| !jump_ts.iter().any(|&jt| jt == c.t))
            .count();
        Ok(bending + 2.0 * self.jumps.len() as f64 + pure_creases as f64)
    }

    /// Sample point for target coordinate t in source segment j, where the
    /// segments are the stretches of u between consecutive jumps.
    fn recovery_grid_nodes(&self, k: usize, eps: f64, t_star: f64) -> usize {
        let (a, b) = self.domain();
        let zmin = self
            .jumps
            .iter()
            .map(|j| j.height().abs())
            .fold(f64::INFINITY, f64::min);
        let zfactor = if self.jumps.is_empty() { 1.0 } else { zmin.powf(1.0 / k as f64) };
        let h = eps * zfactor * t_star / 64.0;
        ((b - a) / h).ceil() as usize + 1
    }

    /// Glue the optimal transition profile into each jump and sample on a
    /// uniform grid: the resulting signal's energy approaches the limit
    /// energy with constants (1, m_k) as eps decreases.
    ///
    /// Outside the jump windows (width eps |z|^(1/k) T* around each jump) the
    /// signal samples u at a shifted argument; the stretches between windows
    /// are reparametrized affinely so every piece of u is represented. The
    /// windows must be pairwise disjoint and inside the open domain.
    ///
    /// `nodes` overrides the grid size (default: spacing eps min|z|^(1/k)
    /// T*/64, per the experiment resolution contract with a safety factor).
    pub fn recovery_sequence(&self, k: usize, eps: f64, nodes: Option<usize>) -> Result<GridSignal> {
        self.recovery_sequence_weighted(k, eps, 1.0, 1.0, nodes)
    }

    /// [`Self::recovery_sequence`] for the energy with potential plateau b
    /// and derivative weight c: the optimal transition length, and with it
    /// the window width, scales by (c/b)^(1/2k).
    pub fn recovery_sequence_weighted(
        &self,
        k: usize,
        eps: f64,
        b_coef: f64,
        c_coef: f64,
        nodes: Option<usize>,
    ) -> Result<GridSignal> {
        if k < 2 || k > MAX_K {
            return Err(Error::validation(format!("recovery order must be in 2..={MAX_K}")));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::validation("recovery needs eps > 0"));
        }
        let (a, b) = self.domain();
        let base = m_k_general(k, b_coef, c_coef)?;
        let t_star = base.optimal_t;

        let n = match nodes {
            Some(n) => n,
            None => self.recovery_grid_nodes(k, eps, t_star),
        };
        let n = n.max(2 * k + 2);
        if n > 50_000_000 {
            return Err(Error::validation(format!(
                "recovery grid would need {n} nodes; lower the resolution or raise eps"
            )));
        }
        let h = (b - a) / (n - 1) as f64;

        if self.jumps.is_empty() {
            let values = (0..n).map(|i| self.eval(a + i as f64 * h)).collect();
            return GridSignal::new(a, h, values);
        }

        // Window geometry and per-jump profiles.
        let mut windows = Vec::with_capacity(self.jumps.len());
        let mut profiles = Vec::with_capacity(self.jumps.len());
        for j in &self.jumps {
            let z = j.height();
            let delta = eps * z.abs().powf(1.0 / k as f64) * t_star;
            let (tau, sigma) = (j.t - 0.5 * delta, j.t + 0.5 * delta);
            if tau <= a || sigma >= b {
                return Err(Error::validation(format!(
                    "jump window [{tau}, {sigma}] leaves the domain; eps too large"
                )));
            }
            if let Some(&(_, prev_sigma)) = windows.last() {
                if tau <= prev_sigma {
                    return Err(Error::validation(format!(
                        "jump windows overlap near t = {}; eps too large",
                        j.t
                    )));
                }
            }
            windows.push((tau, sigma));
            let spec = BoundarySpec::<f64>::jump_only(k, z)?;
            profiles.push(hermite_profile(k, &spec, delta)?);
        }

        // Source segments of u between consecutive jumps; evaluation inside
        // segment s resolves breakpoint ties away from the segment ends.
        let m = self.jumps.len();
        let seg_ends: Vec<(f64, f64)> = (0..=m)
            .map(|s| {
                let lo = if s == 0 { a } else { self.jumps[s - 1].t };
                let hi = if s == m { b } else { self.jumps[s].t };
                (lo, hi)
            })
            .collect();
        let eval_in_segment = |s: usize, t: f64| -> f64 {
            let (lo, hi) = seg_ends[s];
            // Clamp against float drift, then bias the tie toward the
            // segment interior at its right end (left trace at a jump).
            let t = t.clamp(lo, hi);
            let idx = if t >= hi { self.piece_index_left(hi) } else { self.piece_index(t) };
            self.pieces[idx].poly.eval(&t)
        };

        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let t = a + i as f64 * h;
            // Window containing t?
            let mut val = None;
            for (w, &(tau, sigma)) in windows.iter().enumerate() {
                if t >= tau && t <= sigma {
                    let jump = &self.jumps[w];
                    let mid = 0.5 * (jump.left + jump.right);
                    val = Some(mid + profiles[w].eval(&(t - jump.t)));
                    break;
                }
            }
            let v = val.unwrap_or_else(|| {
                // Locate the target segment between windows.
                let s = windows.iter().take_while(|&&(_, sigma)| t > sigma).count();
                let (g_lo, g_hi) = (
                    if s == 0 { a } else { windows[s - 1].1 },
                    if s == m { b } else { windows[s].0 },
                );
                let (s_lo, s_hi) = seg_ends[s];
                let src = if s == 0 {
                    // Pure shift: left outer stretch drops a sliver at a.
                    t + (s_hi - g_hi)
                } else if s == m {
                    t - (g_lo - s_lo)
                } else {
                    s_lo + (t - g_lo) * (s_hi - s_lo) / (g_hi - g_lo)
                };
                eval_in_segment(s, src)
            });
            values.push(v);
        }
        GridSignal::new(a, h, values)
    }

    /// Like `piece_index` with ties resolved to the left piece.
    fn piece_index_left(&self, t: f64) -> usize {
        let mut idx = 0;
        for (i, p) in self.pieces.iter().enumerate() {
            if t > p.a {
                idx = i;
            } else {
                break;
            }
        }
        idx
    }

    pub fn to_json_string(&self) -> Result<String> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                // Re-express around 0 so coeffs are raw monomials in t.
                let raw = p.poly.compose_affine(&0.0, &1.0, 0.0, 1.0)?;
                Ok(PieceJson { a: p.a, b: p.b, kind: "poly".to_string(), coeffs: raw.coefficients })
            })
            .collect::<Result<Vec<_>>>()?;
        let doc = PiecewiseJson { pieces, jumps: self.jumps.clone(), creases: self.creases.clone() };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: PiecewiseJson = serde_json::from_str(text)?;
        let mut pieces = Vec::with_capacity(doc.pieces.len());
        for pj in &doc.pieces {
            if pj.kind != "poly" {
                return Err(Error::validation(format!("unsupported piece kind '{}'", pj.kind)));
            }
            let raw = Polynomial::new(pj.coeffs.clone(), 0.0, 1.0)?;
            // Recentre at the piece midpoint for conditioning.
            let mid = 0.5 * (pj.a + pj.b);
            let hw = 0.5 * (pj.b - pj.a);
            if !(hw > 0.0) {
                return Err(Error::validation("piece needs a < b"));
            }
            let poly = raw.compose_affine(&0.0, &1.0, mid, hw)?;
            pieces.push(Piece::new(pj.a, pj.b, poly)?);
        }
        let built = PiecewiseFunction::new(pieces)?;
        // Listed jumps, when present, must agree with the derived traces.
        if !doc.jumps.is_empty() {
            let live: Vec<&JumpPoint> =
                doc.jumps.iter().filter(|j| j.height() != 0.0).collect();
            if live.len() != built.jumps.len() {
                return Err(Error::validation(format!(
                    "jump table lists {} nonzero jumps but the pieces imply {}",
                    live.len(),
                    built.jumps.len()
                )));
            }
            for (listed, derived) in live.iter().zip(&built.jumps) {
                let tol = 1e-9 * (1.0 + derived.left.abs() + derived.right.abs());
                if (listed.t - derived.t).abs() > 1e-9
                    || (listed.left - derived.left).abs() > tol
                    || (listed.right - derived.right).abs() > tol
                {
                    return Err(Error::validation(format!(
                        "jump table entry at t = {} disagrees with the piece traces",
                        listed.t
                    )));
                }
            }
        }
        Ok(built)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}
