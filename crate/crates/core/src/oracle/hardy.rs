//! Search for a Hardy configuration: a nonmaximally entangled photon state
//! plus analyzer angles `(a, a′, b, b′)` with
//!
//! ```text
//! P(a+, b+)   = p*  > 0
//! P(a+, b′−)  = 0
//! P(a′−, b+)  = 0
//! P(a′+, b′+) = 0
//! ```
//!
//! The state family is `cos γ|HH⟩ + sin γ|VV⟩`. Because every real
//! polarization state is `cos θ|H⟩ + sin θ|V⟩`, rotating the Schmidt basis is
//! the same as shifting the analyzers, so `γ` is the only state parameter.
//! Given `γ` and `a`, each zero constraint fixes one remaining angle:
//! `b′` is the direction B is steered to by `a+`, `a′` is orthogonal to the
//! direction A is steered to by `b′+`, and `b` is orthogonal to the direction
//! B is steered to by `a′−`. The search therefore runs over the real
//! two-parameter family `(γ, a)`: a coarse grid, then compass refinement of
//! the best cells. Every reported probability is recomputed with the Born
//! rule.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use super::{joint_probs_qm, PureTwoParticleState};
use crate::amplitude::{Outcome, SpinKind};
use crate::error::{domain, ensure_finite, Result};

/// Largest admissible value of a constrained probability at a solution.
pub const HARDY_ZERO_TOL: f64 = 1e-10;
/// Cells handed to local refinement after the grid pass.
const REFINE_SEEDS: usize = 4;
const MAX_REFINE_ITERS: usize = 100_000;
/// Keeps γ strictly inside (0, π/2) during refinement.
const GAMMA_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardySettings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyResult {
    pub species: SpinKind,
    /// Entanglement parameter; `π/4` is maximal entanglement.
    pub gamma: f64,
    pub state: PureTwoParticleState,
    pub settings: HardySettings,
    /// `[P(a+, b′−), P(a′−, b+), P(a′+, b′+)]`.
    pub p_zero: [f64; 3],
    /// `P(a+, b+)`.
    pub p_star: f64,
}

impl HardyResult {
    pub fn max_zero(&self) -> f64 {
        self.p_zero.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_feasible(&self) -> bool {
        self.max_zero() <= HARDY_ZERO_TOL && self.p_star > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HardySearch {
    Found(HardyResult),
    NoSolution { cells_evaluated: usize, best_p_star: f64 },
}

impl HardySearch {
    pub fn found(&self) -> Option<&HardyResult> {
        match self {
            HardySearch::Found(r) => Some(r),
            HardySearch::NoSolution { .. } => None,
        }
    }
}

/// Angles fixed by the zero constraints for a given `(γ, a)`.
fn construct(gamma: f64, a: f64) -> (HardySettings, f64) {
    let (s, c) = gamma.sin_cos();
    let (sa, ca) = a.sin_cos();
    // B-side direction selected by A passing at `a`.
    let b_prime = (sa * s).atan2(ca * c);
    let (sbp, cbp) = b_prime.sin_cos();
    // A-side direction selected by B passing at `b′`; `a′` is orthogonal.
    let a_prime = (s * sbp).atan2(c * cbp) + FRAC_PI_2;
    let (sap, cap) = a_prime.sin_cos();
    // B-side direction selected by A absorbing at `a′`; `b` is orthogonal.
    let b = (cap * s).atan2(-sap * c) + FRAC_PI_2;
    let (sb, cb) = b.sin_cos();
    let overlap = ca * cb * c + sa * sb * s;
    (HardySettings { a, a_prime, b, b_prime }, overlap * overlap)
}

/// Builds the `(γ, a)` member of the family and evaluates all four
/// probabilities with the Born rule.
pub fn hardy_configuration(gamma: f64, a: f64) -> Result<HardyResult> {
    ensure_finite("gamma", gamma)?;
    ensure_finite("a", a)?;
    let (settings, _) = construct(gamma, a);
    let (s, c) = gamma.sin_cos();
    let state = PureTwoParticleState::from_real([c, 0.0, 0.0, s])?;
    let sp = SpinKind::Photon;
    let ab = joint_probs_qm(&state, sp, settings.a, settings.b)?;
    let abp = joint_probs_qm(&state, sp, settings.a, settings.b_prime)?;
    let apb = joint_probs_qm(&state, sp, settings.a_prime, settings.b)?;
    let apbp = joint_probs_qm(&state, sp, settings.a_prime, settings.b_prime)?;
    Ok(HardyResult {
        species: sp,
        gamma,
        state,
        settings,
        p_zero: [
            abp.prob(Outcome::Plus, Outcome::Minus),
            apb.prob(Outcome::Minus, Outcome::Plus),
            apbp.prob(Outcome::Plus, Outcome::Plus),
        ],
        p_star: ab.prob(Outcome::Plus, Outcome::Plus),
    })
}

fn objective(x: [f64; 2]) -> f64 {
    construct(x[0], x[1]).1
}

fn clamp_gamma(g: f64) -> f64 {
    g.clamp(GAMMA_MARGIN, FRAC_PI_2 - GAMMA_MARGIN)
}

/// Compass search maximizing `p*` from `start` with initial step `step`.
fn refine(start: [f64; 2], mut step: [f64; 2], tolerance: f64) -> ([f64; 2], f64) {
    let mut x = start;
    let mut fx = objective(x);
    let mut iters = 0;
    while step[0].max(step[1]) > tolerance && iters < MAX_REFINE_ITERS {
        iters += 1;
        let mut moved = false;
        'dims: for dim in 0..2 {
            for sign in [1.0, -1.0] {
                let mut y = x;
                y[dim] += sign * step[dim];
                y[0] = clamp_gamma(y[0]);
                let fy = objective(y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    moved = true;
                    break 'dims;
                }
            }
        }
        if !moved {
            step[0] *= 0.5;
            step[1] *= 0.5;
        }
    }
    (x, fx)
}

/// Grid over `(γ, a)` with `grid_density` points per axis, then refinement
/// until the step falls below `refine_tolerance`.
pub fn hardy_search(grid_density: usize, refine_tolerance: f64) -> Result<HardySearch> {
    if grid_density < 8 {
        return Err(domain(format!("grid density must be at least 8, got {grid_density}")));
    }
    if !(refine_tolerance > 0.0 && refine_tolerance.is_finite()) {
        return Err(domain(format!("refine tolerance must be positive, got {refine_tolerance}")));
    }
    let n = grid_density;
    let h_gamma = FRAC_PI_2 / n as f64;
    let h_a = PI / n as f64;
    let cells: Vec<(f64, [f64; 2])> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let x = [(i as f64 + 0.5) * h_gamma, (j as f64 + 0.5) * h_a];
            (objective(x), x)
        })
        .collect();

    // Stable sort keeps lexicographic cell order among equal values.
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&l, &r| cells[r].0.total_cmp(&cells[l].0));

    let mut best: Option<([f64; 2], f64)> = None;
    for &idx in order.iter().take(REFINE_SEEDS) {
        let (x, fx) = refine(cells[idx].1, [h_gamma, h_a], refine_tolerance);
        if best.is_none_or(|(_, bf)| fx > bf) {
            best = Some((x, fx));
        }
    }

    let (x, _) = best.expect("grid has at least 64 cells");
    let result = hardy_configuration(x[0], x[1])?;
    if result.is_feasible() {
        Ok(HardySearch::Found(result))
    } else {
        Ok(HardySearch::NoSolution { cells_evaluated: cells.len(), best_p_star: result.p_star })
    }
}
