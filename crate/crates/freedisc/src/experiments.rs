//! Reproducible parameter sweeps tying the profile predictions to actual
//! minimizers: jump-density measurement over shrinking eps, profile-shape
//! fits, the piecewise-constant-limit calibration study, and the
//! second-order (crease/jump counting) study. Reports carry per-eps records,
//! a summary against the predicted constants, and provenance (config hash,
//! seeds, timestamp); identical configs reproduce identical reports except
//! for the timestamp.

use crate::energy::{self, energy_parts, minimize, EnergyParams, MinimizeOptions, Potential};
use crate::error::{Error, Result};
use crate::grid::GridSignal;
use crate::piecewise::PiecewiseFunction;
use crate::profile::{calibrate_c_k, m_k_general, MAX_K};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Step-plus-noise data signal for denoising sweeps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalSpec {
    /// Step height z at the domain midpoint (0 for a flat signal).
    pub jump: f64,
    /// Uniform noise amplitude added per node.
    pub noise: f64,
}

/// Grid spacing as a function of eps: the transition window
/// eps |z|^(1/k) T* must contain at least `cells_per_transition` cells.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolutionRule {
    pub cells_per_transition: f64,
}

impl ResolutionRule {
    /// Spacing for the given eps; T* carries the derivative-weight scaling,
    /// and a flat signal (z = 0) drops the |z| factor.
    fn spacing(&self, k: usize, eps: f64, jump: f64, derivative_weight: f64) -> Result<f64> {
        let t_star = m_k_general(k, 1.0, derivative_weight)?.optimal_t;
        let zfac = if jump == 0.0 { 1.0 } else { jump.abs().powf(1.0 / k as f64) };
        Ok(eps * zfac * t_star / self.cells_per_transition)
    }
}

/// Full description of one denoising sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPlan {
    pub k: usize,
    /// Strictly decreasing; the last entry is the finest scale.
    pub eps_list: Vec<f64>,
    pub resolution: ResolutionRule,
    pub signal: SignalSpec,
    pub lambda: f64,
    /// Weight c on the eps^(2k-1) penalty (1 for the plain functional).
    pub derivative_weight: f64,
    /// One repetition per seed (noise realizations).
    pub seeds: Vec<u64>,
    pub tolerance: f64,
    pub max_iter: usize,
    pub smoothing: bool,
    /// Gradient-phase iterations before Newton refinement. Fixed per plan:
    /// its length selects the local minimum basin on hard instances.
    pub warmup: usize,
}

impl SweepPlan {
    /// Unit-jump plan at the frozen defaults that resolve the density and
    /// profile targets for k = 2.
    pub fn default_unit_jump(k: usize) -> Self {
        SweepPlan {
            k,
            eps_list: (4..=9).map(|p| 2.0f64.powi(-p)).collect(),
            resolution: ResolutionRule { cells_per_transition: 64.0 },
            signal: SignalSpec { jump: 1.0, noise: 0.0 },
            lambda: 1600.0,
            derivative_weight: 1.0,
            seeds: vec![0],
            tolerance: 1e-8,
            max_iter: 100_000,
            smoothing: false,
            warmup: 2000,
        }
    }

    /// Small-jump plan (z = 1/16): the shallower step needs a much stiffer
    /// fidelity term and finer scales before the transition forms.
    pub fn default_small_jump(k: usize) -> Self {
        SweepPlan {
            eps_list: (6..=12).map(|p| 2.0f64.powi(-p)).collect(),
            signal: SignalSpec { jump: 1.0 / 16.0, noise: 0.0 },
            lambda: 1e7,
            ..SweepPlan::default_unit_jump(k)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 2 || self.k > MAX_K {
            return Err(Error::validation(format!("sweep needs 2 <= k <= {MAX_K}")));
        }
        if self.eps_list.is_empty() {
            return Err(Error::validation("sweep needs a nonempty eps list"));
        }
        for w in self.eps_list.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::validation("eps list must be strictly decreasing"));
            }
        }
        if self.eps_list.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::validation("eps values must be positive and finite"));
        }
        if !(self.resolution.cells_per_transition >= 32.0) {
            return Err(Error::validation(
                "resolution must put at least 32 cells in a transition window",
            ));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::validation("sweep needs lambda > 0"));
        }
        if !(self.derivative_weight > 0.0) || !self.derivative_weight.is_finite() {
            return Err(Error::validation("derivative weight must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::validation("sweep needs at least one seed"));
        }
        if !self.signal.jump.is_finite() || !(self.signal.noise >= 0.0) {
            return Err(Error::validation("signal spec needs finite jump and noise >= 0"));
        }
        Ok(())
    }

    fn config_hash(&self, experiment: &str) -> Result<String> {
        let mut hasher = Sha256::new();
        hasher.update(experiment.as_bytes());
        hasher.update(serde_json::to_string(self)?.as_bytes());
        Ok(hex_string(&hasher.finalize()))
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Fidelity-dominant default for custom jump heights: about forty times the
/// level at which the data term stops supporting a transition.
pub fn heuristic_lambda(k: usize, jump: f64, derivative_weight: f64) -> Result<f64> {
    if jump == 0.0 {
        return Ok(1600.0);
    }
    let m_eff = m_k_general(k, 1.0, derivative_weight)?.energy;
    Ok(160.0 * m_eff * m_eff / jump.abs().powi(3))
}

/// Outcome of one minimization (or construction) at one eps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsRecord {
    pub eps: f64,
    /// Case tag: seed index for sweeps, target name for the counting study.
    pub label: String,
    pub nodes: usize,
    /// Energy of the result without the fidelity term.
    pub energy: f64,
    pub transition_intervals: Vec<(f64, f64)>,
    pub transition_count: usize,
    pub jump_estimates: Vec<f64>,
    /// Transition-energy estimate: total minus the below-threshold
    /// Dirichlet part.
    pub density: f64,
    /// Sup-norm distance to the rescaled optimal profile, when exactly one
    /// transition interval is present.
    pub fit_error: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

impl EpsRecord {
    fn failed(eps: f64, label: String, message: String) -> Self {
        EpsRecord {
            eps,
            label,
            nodes: 0,
            energy: f64::NAN,
            transition_intervals: Vec::new(),
            transition_count: 0,
            jump_estimates: Vec::new(),
            density: f64::NAN,
            fit_error: None,
            converged: false,
            error: Some(message),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryItem {
    pub label: String,
    pub measured: f64,
    pub target: f64,
    pub rel_error: f64,
}

/// Headline comparison plus per-case breakdown.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub measured: f64,
    pub target: f64,
    pub rel_error: f64,
    pub items: Vec<SummaryItem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub timestamp_unix: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// Ordered by the eps list (coarse to fine), then by case label.
    pub records: Vec<EpsRecord>,
    pub summary: Summary,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plot-ready table with columns eps, energy, density, fit_error.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("eps,energy,density,fit_error\n");
        for r in &self.records {
            let fit = r.fit_error.map_or(String::new(), |f| format!("{f:.16e}"));
            out.push_str(&format!("{:.16e},{:.16e},{:.16e},{}\n", r.eps, r.energy, r.density, fit));
        }
        out
    }

    /// Write `<stem>.json` and `<stem>.csv` under `dir` (created if absent).
    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.json")), self.to_json_string()?)?;
        std::fs::write(dir.join(format!("{stem}.csv")), self.to_csv_string())?;
        Ok(())
    }
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn rel_error(measured: f64, target: f64) -> f64 {
    if target == 0.0 {
        measured.abs()
    } else {
        (measured - target) / target
    }
}

/// Data signal for the plan: a centered step of the requested height plus
/// seeded uniform noise, on n nodes over (0, 1).
fn make_data(plan: &SweepPlan, n: usize, seed: u64, eps_index: usize) -> Result<GridSignal> {
    let z = plan.signal.jump;
    let mut g = GridSignal::from_fn(0.0, 1.0, n, |t| if t < 0.5 { -0.5 * z } else { 0.5 * z })?;
    if plan.signal.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(eps_index as u128 * (1 << 16));
        for v in &mut g.values {
            *v += plan.signal.noise * rng.gen_range(-1.0..1.0);
        }
    }
    Ok(g)
}

fn sweep_record(plan: &SweepPlan, eps: f64, eps_index: usize, seed: u64, label: String) -> EpsRecord {
    let run = || -> Result<EpsRecord> {
        let h = plan.resolution.spacing(plan.k, eps, plan.signal.jump, plan.derivative_weight)?;
        let n = ((1.0 / h).ceil() as usize + 1).max(2 * plan.k + 2);
        if n > 50_000_000 {
            return Err(Error::validation(format!(
                "sweep at eps = {eps} would need {n} nodes; raise eps or coarsen the rule"
            )));
        }
        let g = make_data(plan, n, seed, eps_index)?;
        let params = EnergyParams {
            k: plan.k,
            eps,
            potential: Potential::standard(),
            derivative_weight: plan.derivative_weight,
            fidelity_weight: plan.lambda,
            fidelity_data: Some(g.clone()),
        };
        let opts = MinimizeOptions {
            tolerance: plan.tolerance,
            max_iter: plan.max_iter,
            smoothing: plan.smoothing,
            warmup: plan.warmup,
        };
        let result = minimize(&g, &params, &opts)?;
        let u = &result.signal;
        let free = params.without_fidelity();
        let parts = energy_parts(u, &free)?;
        let report = energy::detect_transitions(u, &free, None)?;
        let fit_error = profile_fit_error(plan, eps, u, &report);
        Ok(EpsRecord {
            eps,
            label: label.clone(),
            nodes: n,
            energy: parts.total(),
            transition_count: report.intervals.len(),
            transition_intervals: report.intervals,
            jump_estimates: report.jump_estimates,
            density: parts.transition_energy(),
            fit_error,
            converged: result.converged,
            error: None,
        })
    };
    match run() {
        Ok(r) => r,
        Err(e) => EpsRecord::failed(eps, label, e.to_string()),
    }
}

/// Sup-norm distance between the rescaled minimizer and the optimal
/// profile, measured over the profile support. The transition is centered
/// horizontally at the detected interval's midpoint and vertically at the
/// mean of its endpoint values, then rescaled by beta = eps |z|^(1/k).
fn profile_fit_error(
    plan: &SweepPlan,
    eps: f64,
    u: &GridSignal,
    report: &energy::TransitionReport,
) -> Option<f64> {
    let z = plan.signal.jump;
    if z == 0.0 || report.intervals.len() != 1 {
        return None;
    }
    let prof = m_k_general(plan.k, 1.0, plan.derivative_weight).ok()?;
    let (tau, sigma) = report.intervals[0];
    let i_tau = ((tau - u.t0) / u.h).round() as usize;
    let i_sigma = ((sigma - u.t0) / u.h).round() as usize;
    let t_c = 0.5 * (tau + sigma);
    let mid = 0.5 * (u.values[i_tau] + u.values[i_sigma]);
    let beta = eps * z.abs().powf(1.0 / plan.k as f64);
    let half_support = 0.5 * prof.optimal_t;
    let mut worst = 0.0f64;
    for i in 0..u.len() {
        let s = (u.t(i) - t_c) / beta;
        if s.abs() <= half_support {
            let expected = prof.profile.eval(&s);
            let actual = (u.values[i] - mid) / z;
            worst = worst.max((actual - expected).abs());
        }
    }
    Some(worst)
}

fn run_sweep(plan: &SweepPlan, experiment: &str) -> Result<Vec<EpsRecord>> {
    plan.validate()?;
    let jobs: Vec<(usize, f64, usize, u64)> = plan
        .eps_list
        .iter()
        .enumerate()
        .flat_map(|(i, &eps)| {
            plan.seeds.iter().enumerate().map(move |(si, &seed)| (i, eps, si, seed))
        })
        .collect();
    let _ = experiment;
    let records: Vec<EpsRecord> = jobs
        .par_iter()
        .map(|&(i, eps, si, seed)| sweep_record(plan, eps, i, seed, format!("seed-{si}")))
        .collect();
    Ok(records)
}

/// Mean density over the records at the finest eps.
fn finest_density(plan: &SweepPlan, records: &[EpsRecord]) -> f64 {
    let finest = *plan.eps_list.last().unwrap();
    let vals: Vec<f64> = records
        .iter()
        .filter(|r| r.eps == finest && r.error.is_none())
        .map(|r| r.density)
        .collect();
    if vals.is_empty() {
        f64::NAN
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Minimize the denoising energy along the eps list and compare the
/// measured transition energy with the predicted jump cost m_k |z|^(1/k).
pub fn run_jump_density_sweep(plan: &SweepPlan) -> Result<ExperimentReport> {
    let records = run_sweep(plan, "jump-density")?;
    let m_eff = m_k_general(plan.k, 1.0, plan.derivative_weight)?.energy;
    let z = plan.signal.jump;
    let target = if z == 0.0 { 0.0 } else { m_eff * z.abs().powf(1.0 / plan.k as f64) };
    let measured = finest_density(plan, &records);
    let summary = Summary {
        measured,
        target,
        rel_error: rel_error(measured, target),
        items: Vec::new(),
    };
    Ok(ExperimentReport {
        experiment: "jump-density".to_string(),
        records,
        summary,
        provenance: Provenance {
            config_hash: plan.config_hash("jump-density")?,
            seeds: plan.seeds.clone(),
            timestamp_unix: now_unix(),
        },
    })
}

/// As the density sweep, but the headline number is the sup-norm distance
/// between the rescaled minimizer and the optimal transition profile at the
/// finest eps (target 0; minimizers with several transitions are flagged
/// and not fitted).
pub fn run_profile_fit(plan: &SweepPlan) -> Result<ExperimentReport> {
    if plan.signal.jump == 0.0 {
        return Err(Error::validation("profile fit needs a nonzero jump"));
    }
    let records = run_sweep(plan, "profile-fit")?;
    let finest = *plan.eps_list.last().unwrap();
    let fits: Vec<f64> =
        records.iter().filter(|r| r.eps == finest).filter_map(|r| r.fit_error).collect();
    let measured = if fits.is_empty() {
        f64::NAN
    } else {
        fits.iter().sum::<f64>() / fits.len() as f64
    };
    let summary = Summary {
        measured,
        target: 0.0,
        rel_error: rel_error(measured, 0.0),
        items: Vec::new(),
    };
    Ok(ExperimentReport {
        experiment: "profile-fit".to_string(),
        records,
        summary,
        provenance: Provenance {
            config_hash: plan.config_hash("profile-fit")?,
            seeds: plan.seeds.clone(),
            timestamp_unix: now_unix(),
        },
    })
}

/// For each k, calibrate the derivative weight so a unit jump costs mu and
/// measure the actual jump cost of a height-`jump` step: as k grows the
/// cost approaches mu (|z|^(1/k) -> 1), recovering the piecewise-constant
/// segmentation limit.
pub fn run_ms_approximation(
    mu: f64,
    k_list: &[usize],
    jump: f64,
    eps_list: &[f64],
) -> Result<ExperimentReport> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::validation("calibration study needs mu > 0"));
    }
    if k_list.is_empty() {
        return Err(Error::validation("calibration study needs at least one k"));
    }
    let mut records = Vec::new();
    let mut items = Vec::new();
    let mut seeds = Vec::new();
    let mut hasher = Sha256::new();
    hasher.update(format!("ms-approximation mu={mu} jump={jump}").as_bytes());
    for &k in k_list {
        let c_k = calibrate_c_k(k, mu)?;
        let mut plan = SweepPlan::default_unit_jump(k);
        plan.eps_list = eps_list.to_vec();
        plan.signal.jump = jump;
        plan.derivative_weight = c_k;
        plan.lambda = heuristic_lambda(k, jump, c_k)?;
        hasher.update(serde_json::to_string(&plan)?.as_bytes());
        seeds.extend_from_slice(&plan.seeds);
        let mut recs = run_sweep(&plan, "ms-approximation")?;
        for r in &mut recs {
            r.label = format!("k-{k}");
        }
        let measured = finest_density(&plan, &recs);
        let target = mu * jump.abs().powf(1.0 / k as f64);
        items.push(SummaryItem {
            label: format!("k-{k}"),
            measured,
            target,
            rel_error: rel_error(measured, target),
        });
        records.extend(recs);
    }
    let last = items.last().unwrap();
    let summary = Summary {
        measured: last.measured,
        target: last.target,
        rel_error: last.rel_error,
        items,
    };
    Ok(ExperimentReport {
        experiment: "ms-approximation".to_string(),
        records,
        summary,
        provenance: Provenance {
            config_hash: hex_string(&hasher.finalize()),
            seeds,
            timestamp_unix: now_unix(),
        },
    })
}

/// One second-order counting case: build the derivative target, glue the
/// calibrated recovery into it, take the primitive, and evaluate the
/// second-order functional.
fn bz_case(k: usize, eps: f64, c: f64, target: &str) -> Result<(f64, usize)> {
    let v_target = match target {
        // u' steps from 0 to 1 at the midpoint: one unit crease of u.
        "crease" => PiecewiseFunction::step(0.0, 1.0, 0.5, 0.0, 1.0)?,
        // u' is a unit plateau of width 1/8: a slope-1 ramp of u, whose two
        // slope discontinuities together mimic the cost of one jump.
        "jump" => {
            let lo = 0.5 - 1.0 / 16.0;
            let hi = 0.5 + 1.0 / 16.0;
            PiecewiseFunction::new(vec![
                crate::piecewise::Piece::constant(0.0, lo, 0.0)?,
                crate::piecewise::Piece::constant(lo, hi, 1.0)?,
                crate::piecewise::Piece::constant(hi, 1.0, 0.0)?,
            ])?
        }
        "flat" => PiecewiseFunction::step(0.0, 1.0, 0.5, 0.0, 0.0).unwrap_or(
            PiecewiseFunction::new(vec![crate::piecewise::Piece::constant(0.0, 1.0, 0.0)?])?,
        ),
        other => return Err(Error::validation(format!("unknown counting target '{other}'"))),
    };
    let v = v_target.recovery_sequence_weighted(k - 1, eps, 1.0, c, None)?;
    // Left-Riemann primitive: forward differences recover v exactly.
    let mut acc = 0.0;
    let mut u_values = Vec::with_capacity(v.len() + 1);
    u_values.push(0.0);
    for val in &v.values {
        acc += val * v.h;
        u_values.push(acc);
    }
    let u = GridSignal::new(v.t0 - 0.5 * v.h, v.h, u_values)?;
    Ok((energy::bz_functional(&u, k, eps)?, u.len()))
}

/// Evaluate the second-order functional along constructed sequences for a
/// one-crease target (limit cost 1), a one-jump target (limit cost 2), and
/// a flat target (cost 0).
pub fn run_bz_approximation(k: usize, eps_list: &[f64]) -> Result<ExperimentReport> {
    if k < 3 || k > MAX_K {
        return Err(Error::validation(format!("counting study needs 3 <= k <= {MAX_K}")));
    }
    if eps_list.is_empty() {
        return Err(Error::validation("counting study needs a nonempty eps list"));
    }
    for w in eps_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::validation("eps list must be strictly decreasing"));
        }
    }
    let c = calibrate_c_k(k - 1, 1.0)?;
    let cases = [("crease", 1.0f64), ("jump", 2.0), ("flat", 0.0)];
    let jobs: Vec<(f64, &str, f64)> = eps_list
        .iter()
        .flat_map(|&eps| cases.iter().map(move |&(name, target)| (eps, name, target)))
        .collect();
    let records: Vec<EpsRecord> = jobs
        .par_iter()
        .map(|&(eps, name, _)| match bz_case(k, eps, c, name) {
            Ok((g, n)) => EpsRecord {
                eps,
                label: name.to_string(),
                nodes: n,
                energy: g,
                transition_intervals: Vec::new(),
                transition_count: 0,
                jump_estimates: Vec::new(),
                density: g,
                fit_error: None,
                converged: true,
                error: None,
            },
            Err(e) => EpsRecord::failed(eps, name.to_string(), e.to_string()),
        })
        .collect();
    let finest = *eps_list.last().unwrap();
    let items: Vec<SummaryItem> = cases
        .iter()
        .map(|&(name, target)| {
            let measured = records
                .iter()
                .find(|r| r.eps == finest && r.label == name && r.error.is_none())
                .map_or(f64::NAN, |r| r.energy);
            SummaryItem {
                label: name.to_string(),
                measured,
                target,
                rel_error: rel_error(measured, target),
            }
        })
        .collect();
    let mut hasher = Sha256::new();
    hasher.update(format!("bz-approximation k={k} eps={eps_list:?}").as_bytes());
    let summary = Summary {
        measured: items[0].measured,
        target: items[0].target,
        rel_error: items[0].rel_error,
        items,
    };
    Ok(ExperimentReport {
        experiment: "bz-approximation".to_string(),
        records,
        summary,
        provenance: Provenance {
            config_hash: hex_string(&hasher.finalize()),
            seeds: Vec::new(),
            timestamp_unix: now_unix(),
        },
    })
}

/// Flat key-value configuration mirroring the plan fields; unknown keys are
/// rejected so typos fail loudly.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    /// jump-density | profile-fit | ms-approximation | bz-approximation
    pub experiment: String,
    pub output_dir: Option<String>,
    pub k: Option<usize>,
    pub k_list: Option<Vec<usize>>,
    pub mu: Option<f64>,
    pub jump: Option<f64>,
    pub noise: Option<f64>,
    pub lambda: Option<f64>,
    pub eps_list: Option<Vec<f64>>,
    /// Convenience alternative to eps-list: entries p meaning eps = 2^-p.
    pub eps_powers: Option<Vec<u32>>,
    pub cells_per_transition: Option<f64>,
    pub seeds: Option<Vec<u64>>,
    pub tolerance: Option<f64>,
    pub max_iter: Option<usize>,
    pub smoothing: Option<bool>,
    pub warmup: Option<usize>,
    pub derivative_weight: Option<f64>,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

impl ExperimentConfig {
    fn eps_list(&self, default_powers: std::ops::RangeInclusive<i32>) -> Result<Vec<f64>> {
        if self.eps_list.is_some() && self.eps_powers.is_some() {
            return Err(Error::Config("give eps-list or eps-powers, not both".to_string()));
        }
        if let Some(list) = &self.eps_list {
            return Ok(list.clone());
        }
        if let Some(powers) = &self.eps_powers {
            return Ok(powers.iter().map(|&p| 2.0f64.powi(-(p as i32))).collect());
        }
        Ok(default_powers.map(|p| 2.0f64.powi(-p)).collect())
    }

    fn build_plan(&self) -> Result<SweepPlan> {
        let k = self.k.unwrap_or(2);
        let jump = self.jump.unwrap_or(1.0);
        let derivative_weight = self.derivative_weight.unwrap_or(1.0);
        let lambda = match self.lambda {
            Some(l) => l,
            None => heuristic_lambda(k, jump, derivative_weight)?,
        };
        Ok(SweepPlan {
            k,
            eps_list: self.eps_list(4..=9)?,
            resolution: ResolutionRule {
                cells_per_transition: self.cells_per_transition.unwrap_or(64.0),
            },
            signal: SignalSpec { jump, noise: self.noise.unwrap_or(0.0) },
            lambda,
            derivative_weight,
            seeds: self.seeds.clone().unwrap_or_else(|| vec![0]),
            tolerance: self.tolerance.unwrap_or(1e-8),
            max_iter: self.max_iter.unwrap_or(100_000),
            smoothing: self.smoothing.unwrap_or(false),
            warmup: self.warmup.unwrap_or(2000),
        })
    }
}

/// Dispatch a parsed configuration to the matching experiment.
pub fn run_from_config(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.experiment.as_str() {
        "jump-density" => run_jump_density_sweep(&cfg.build_plan()?),
        "profile-fit" => run_profile_fit(&cfg.build_plan()?),
        "ms-approximation" => {
            let k_list = cfg.k_list.clone().unwrap_or_else(|| vec![2, 3]);
            run_ms_approximation(
                cfg.mu.unwrap_or(1.0),
                &k_list,
                cfg.jump.unwrap_or(1.0),
                &cfg.eps_list(4..=5)?,
            )
        }
        "bz-approximation" => {
            run_bz_approximation(cfg.k.unwrap_or(3), &cfg.eps_list(5..=7)?)
        }
        other => Err(Error::Config(format!(
            "unknown experiment '{other}' (expected jump-density, profile-fit, ms-approximation, or bz-approximation)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_plan(k: usize) -> SweepPlan {
        SweepPlan {
            eps_list: vec![2.0f64.powi(-4), 2.0f64.powi(-5)],
            warmup: 400,
            ..SweepPlan::default_unit_jump(k)
        }
    }

    #[test]
    fn flat_signal_has_no_transitions() {
        let mut plan = quick_plan(2);
        plan.signal.jump = 0.0;
        let report = run_jump_density_sweep(&plan).unwrap();
        assert_eq!(report.summary.target, 0.0);
        for r in &report.records {
            assert!(r.error.is_none(), "{:?}", r.error);
            assert_eq!(r.transition_count, 0, "eps {}", r.eps);
            assert!(r.density.abs() < 1e-10);
        }
    }

    #[test]
    fn unit_jump_density_lands_near_prediction_at_coarse_eps() {
        let plan = quick_plan(2);
        let report = run_jump_density_sweep(&plan).unwrap();
        for r in &report.records {
            assert!(r.error.is_none(), "{:?}", r.error);
            assert!(r.converged, "eps {}", r.eps);
            assert_eq!(r.transition_count, 1, "eps {}", r.eps);
        }
        // Coarse eps: generous band only; the acceptance sweep tightens it.
        assert!(report.summary.rel_error.abs() < 0.25, "{}", report.summary.rel_error);
    }

    #[test]
    fn report_is_deterministic_modulo_timestamp() {
        let mut plan = quick_plan(2);
        plan.signal.noise = 0.05;
        plan.seeds = vec![7, 8];
        let mut a = run_jump_density_sweep(&plan).unwrap();
        let mut b = run_jump_density_sweep(&plan).unwrap();
        a.provenance.timestamp_unix = 0;
        b.provenance.timestamp_unix = 0;
        assert_eq!(a.to_json_string().unwrap(), b.to_json_string().unwrap());
    }

    #[test]
    fn csv_has_pinned_columns() {
        let plan = quick_plan(2);
        let report = run_jump_density_sweep(&plan).unwrap();
        let csv = report.to_csv_string();
        assert!(csv.starts_with("eps,energy,density,fit_error\n"));
        assert_eq!(csv.lines().count(), report.records.len() + 1);
    }

    #[test]
    fn invalid_plans_rejected() {
        let mut plan = quick_plan(2);
        plan.eps_list = vec![0.1, 0.2];
        assert!(run_jump_density_sweep(&plan).is_err());
        let mut plan = quick_plan(2);
        plan.lambda = 0.0;
        assert!(run_jump_density_sweep(&plan).is_err());
        let mut plan = quick_plan(2);
        plan.resolution.cells_per_transition = 8.0;
        assert!(run_jump_density_sweep(&plan).is_err());
    }

    #[test]
    fn config_parsing_and_dispatch() {
        let cfg = parse_config(
            "experiment = \"jump-density\"\nk = 2\njump = 1.0\nlambda = 1600.0\neps-powers = [4, 5]\nwarmup = 400\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, "jump-density");
        let report = run_from_config(&cfg).unwrap();
        assert_eq!(report.records.len(), 2);
        assert!(parse_config("experiment = \"x\"\nnot-a-key = 1\n").is_err());
        let bad = parse_config("experiment = \"nope\"\n").unwrap();
        assert!(run_from_config(&bad).is_err());
    }

    #[test]
    fn bz_cases_trend_to_counts() {
        let eps_list = [2.0f64.powi(-5), 2.0f64.powi(-6)];
        let report = run_bz_approximation(3, &eps_list).unwrap();
        assert_eq!(report.records.len(), 6);
        for r in &report.records {
            assert!(r.error.is_none(), "{}: {:?}", r.label, r.error);
        }
        let find = |label: &str| {
            report
                .summary
                .items
                .iter()
                .find(|i| i.label == label)
                .unwrap()
                .clone()
        };
        let crease = find("crease");
        assert!((crease.measured - 1.0).abs() < 0.15, "{}", crease.measured);
        let jump = find("jump");
        assert!((jump.measured - 2.0).abs() < 0.3, "{}", jump.measured);
        let flat = find("flat");
        assert_eq!(flat.measured, 0.0);
    }

    #[test]
    fn ms_costs_move_toward_mu_with_k() {
        // z = 1/16: cost target mu |z|^(1/k) rises toward mu as k grows.
        let eps_list = [2.0f64.powi(-4)];
        let report = run_ms_approximation(1.0, &[2, 4], 1.0 / 16.0, &eps_list).unwrap();
        let k2 = &report.summary.items[0];
        let k4 = &report.summary.items[1];
        assert!(k2.target < k4.target);
        assert!(
            (k4.measured - 1.0).abs() < (k2.measured - 1.0).abs(),
            "k4 {} vs k2 {}",
            k4.measured,
            k2.measured
        );
    }

    #[test]
    fn report_files_written() {
        let dir = tempfile::tempdir().unwrap();
        let plan = quick_plan(2);
        let report = run_jump_density_sweep(&plan).unwrap();
        report.write(dir.path(), "density").unwrap();
        let json = std::fs::read_to_string(dir.path().join("density.json")).unwrap();
        assert!(json.contains("\"experiment\": \"jump-density\""));
        let csv = std::fs::read_to_string(dir.path().join("density.csv")).unwrap();
        assert!(csv.starts_with("eps,"));
    }
}
