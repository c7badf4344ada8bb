//! Singular perturbations of free-discontinuity energies in one dimension.
//!
//! The library studies grid discretizations of the family
//!
//! ```text
//!   F_eps(u) = int f_eps(u') dt + eps^(2k-1) int (u^(k))^2 dt,
//!   f_eps(z) = min{z^2, 1/eps},
//! ```
//!
//! whose limit as eps -> 0 couples a Dirichlet term with a jump penalty
//! m_k * sum |jump|^(1/k). Modules:
//!
//! * [`profile`] - optimal transition profiles, the constants A_k and m_k,
//!   their scaled and derivative-constrained variants, and calibration.
//! * [`grid`] / [`energy`] - grid signals, energy evaluation, gradients,
//!   minimization, and transition detection.
//! * [`piecewise`] - piecewise-polynomial limit objects, limit energies,
//!   recovery sequences, and the second-order (Blake-Zisserman type) energy.
//! * [`interp`] - an empirical harness for the interpolation inequality
//!   relating intermediate derivatives to the energy.
//! * [`experiments`] - reproducible parameter sweeps tying the profile
//!   predictions to actual minimizers, with JSON/CSV reports.

pub mod energy;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod interp;
pub mod linsolve;
pub mod piecewise;
pub mod poly;
pub mod profile;
pub mod qp;
pub mod quadrature;
pub mod rational;
pub mod search;

pub use energy::{
    evaluate, gradient, minimize, EnergyParams, EnergyParts, MinimizeOptions, MinimizeResult,
    Potential, TransitionReport,
};
pub use error::{Error, Result};
pub use experiments::{
    run_bz_approximation, run_from_config, run_jump_density_sweep, run_ms_approximation,
    run_profile_fit, ExperimentConfig, ExperimentReport, ResolutionRule, SignalSpec, SweepPlan,
};
pub use grid::GridSignal;
pub use interp::{estimate_r_k, interp_sides, InterpCase, InterpSummary, TestFunction};
pub use piecewise::{CreasePoint, JumpPoint, Piece, PiecewiseFunction};
pub use poly::Polynomial;
pub use profile::{BoundarySpec, ProfileJson, ProfileResult};
pub use rational::{Rational, Scalar};
