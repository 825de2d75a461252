//! Textbook quantum mechanics for two two-level systems: state vectors,
//! rank-1 analyzer projectors and the Born rule.
//!
//! Nothing here calls into [`crate::amplitude`]; the two paths meet only in
//! tests and in [`crate::analysis`], where one is checked against the other.

mod hardy;

pub use hardy::{hardy_configuration, hardy_search, HardyResult, HardySearch, HardySettings, HARDY_ZERO_TOL};

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amplitude::{JointDistribution, Outcome, SpinKind};
use crate::error::{domain, ensure_finite, Result};

const NORM_TOL: f64 = 1e-12;

/// Normalized two-particle pure state, amplitudes ordered (++, +−, −+, −−).
/// For photons `+` is H and `−` is V; for spin-½ they are ↑ and ↓ along the
/// reference axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureTwoParticleState {
    pub amps: [Complex64; 4],
}

impl PureTwoParticleState {
    pub fn new(amps: [Complex64; 4]) -> Result<Self> {
        let state = PureTwoParticleState { amps };
        state.check_normalized()?;
        Ok(state)
    }

    pub fn from_real(amps: [f64; 4]) -> Result<Self> {
        Self::new(amps.map(|a| Complex64::new(a, 0.0)))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL || !n.is_finite() {
            Err(domain(format!("state is not normalized: |psi|^2 = {n}")))
        } else {
            Ok(())
        }
    }

    /// Amplitude for particle A in basis state `i` and B in `j` (0 = +, 1 = −).
    fn amp(&self, i: usize, j: usize) -> Complex64 {
        self.amps[2 * i + j]
    }
}

impl Serialize for PureTwoParticleState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.amps.iter().map(|a| [a.re, a.im]).collect();
        pairs.serialize(serializer)
    }
}

/// The maximally entangled states used as references.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellKind {
    /// `(|HV⟩ − |VH⟩)/√2`.
    PhotonAnticorrelated,
    /// `(|↑↓⟩ − |↓↑⟩)/√2`.
    Singlet,
}

impl BellKind {
    pub fn for_species(species: SpinKind) -> Self {
        match species {
            SpinKind::Photon => BellKind::PhotonAnticorrelated,
            SpinKind::Half => BellKind::Singlet,
        }
    }
}

pub fn bell_state(kind: BellKind) -> PureTwoParticleState {
    // Both states share the same component layout in their own basis.
    match kind {
        BellKind::PhotonAnticorrelated | BellKind::Singlet => PureTwoParticleState {
            amps: [
                Complex64::new(0.0, 0.0),
                Complex64::new(FRAC_1_SQRT_2, 0.0),
                Complex64::new(-FRAC_1_SQRT_2, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        },
    }
}

/// 2×2 rank-1 Hermitian projector, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projector {
    pub m: [[Complex64; 2]; 2],
}

impl Projector {
    /// `|v⟩⟨v|` for a unit vector `v`.
    pub fn onto(v: [Complex64; 2]) -> Self {
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = v[r] * v[c].conj();
            }
        }
        Projector { m }
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn squared(&self) -> [[Complex64; 2]; 2] {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = self.m[r][0] * self.m[0][c] + self.m[r][1] * self.m[1][c];
            }
        }
        out
    }

    /// Largest deviation from Hermiticity, idempotence and unit trace.
    pub fn defect(&self) -> f64 {
        let sq = self.squared();
        let mut worst = (self.trace() - 1.0).norm();
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            worst = worst.max((self.m[r][c] - self.m[c][r].conj()).norm());
            worst = worst.max((sq[r][c] - self.m[r][c]).norm());
        }
        worst
    }
}

/// Unit vector selected by an analyzer at `theta` for `outcome`.
///
/// Photons: `cos θ|H⟩ + sin θ|V⟩` for +1. Spin-½: the +1 eigenstate of spin
/// along an in-plane axis at `theta`, i.e. `cos(θ/2)|↑⟩ + sin(θ/2)|↓⟩`.
/// The −1 vector is the orthogonal complement in each case.
pub fn analyzer_vector(species: SpinKind, theta: f64, outcome: Outcome) -> [Complex64; 2] {
    let angle = match species {
        SpinKind::Photon => theta,
        SpinKind::Half => theta / 2.0,
    };
    let (s, c) = angle.sin_cos();
    let (x, y) = match outcome {
        Outcome::Plus => (c, s),
        Outcome::Minus => (-s, c),
    };
    [Complex64::new(x, 0.0), Complex64::new(y, 0.0)]
}

pub fn analyzer_projector(species: SpinKind, theta: f64, outcome: Outcome) -> Result<Projector> {
    ensure_finite("analyzer angle", theta)?;
    Ok(Projector::onto(analyzer_vector(species, theta, outcome)))
}

/// `⟨ψ| P₁ ⊗ P₂ |ψ⟩`.
fn born_expectation(state: &PureTwoParticleState, p1: &Projector, p2: &Projector) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            let bra = state.amp(i, j).conj();
            for k in 0..2 {
                for l in 0..2 {
                    acc += bra * p1.m[i][k] * p2.m[j][l] * state.amp(k, l);
                }
            }
        }
    }
    acc.re
}

/// Born-rule joint outcome distribution for analyzers at `theta1` (A) and
/// `theta2` (B). Probabilities are divided by `⟨ψ|ψ⟩`, which differs from 1
/// only by rounding once the state has passed the normalization check.
pub fn joint_probs_qm(
    state: &PureTwoParticleState,
    species: SpinKind,
    theta1: f64,
    theta2: f64,
) -> Result<JointDistribution> {
    state.check_normalized()?;
    let norm = state.norm_sqr();
    let mut p = [0.0; 4];
    for (idx, (a, b)) in outcome_pairs().into_iter().enumerate() {
        let pa = analyzer_projector(species, theta1, a)?;
        let pb = analyzer_projector(species, theta2, b)?;
        p[idx] = born_expectation(state, &pa, &pb) / norm;
    }
    Ok(JointDistribution { p_pp: p[0], p_pm: p[1], p_mp: p[2], p_mm: p[3] })
}

/// `E = Σ o₁·o₂·P(o₁, o₂)` under the Born rule.
pub fn correlation_qm(state: &PureTwoParticleState, species: SpinKind, theta1: f64, theta2: f64) -> Result<f64> {
    let d = joint_probs_qm(state, species, theta1, theta2)?;
    Ok(outcome_pairs().into_iter().map(|(a, b)| f64::from(a.value() * b.value()) * d.prob(a, b)).sum())
}

fn outcome_pairs() -> [(Outcome, Outcome); 4] {
    [
        (Outcome::Plus, Outcome::Plus),
        (Outcome::Plus, Outcome::Minus),
        (Outcome::Minus, Outcome::Plus),
        (Outcome::Minus, Outcome::Minus),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    const TOL: f64 = 1e-12;

    fn close_matrix(p: &Projector, expected: [[f64; 2]; 2]) -> bool {
        (0..2).all(|r| (0..2).all(|c| (p.m[r][c] - Complex64::new(expected[r][c], 0.0)).norm() < TOL))
    }

    #[test]
    fn bell_states_match_definition() {
        for kind in [BellKind::Singlet, BellKind::PhotonAnticorrelated] {
            let s = bell_state(kind);
            assert!((s.norm_sqr() - 1.0).abs() < TOL);
            assert_eq!(s.amps[1].re, FRAC_1_SQRT_2);
            assert_eq!(s.amps[2].re, -FRAC_1_SQRT_2);
            assert_eq!(s.amps[0].norm(), 0.0);
            assert_eq!(s.amps[3].norm(), 0.0);
        }
    }

    #[test]
    fn projector_examples() {
        let p = analyzer_projector(SpinKind::Photon, 0.0, Outcome::Plus).unwrap();
        assert!(close_matrix(&p, [[1.0, 0.0], [0.0, 0.0]]));
        let p = analyzer_projector(SpinKind::Half, 0.0, Outcome::Plus).unwrap();
        assert!(close_matrix(&p, [[1.0, 0.0], [0.0, 0.0]]));
        let p = analyzer_projector(SpinKind::Photon, FRAC_PI_4, Outcome::Plus).unwrap();
        assert!(close_matrix(&p, [[0.5, 0.5], [0.5, 0.5]]));
        assert!(analyzer_projector(SpinKind::Photon, f64::NAN, Outcome::Plus).is_err());
    }

    #[test]
    fn projectors_are_complete() {
        for species in [SpinKind::Photon, SpinKind::Half] {
            for t in [-3.0, -0.2, 0.0, 0.9, 2.2, 7.1] {
                let p = analyzer_projector(species, t, Outcome::Plus).unwrap();
                let m = analyzer_projector(species, t, Outcome::Minus).unwrap();
                assert!(p.defect() < TOL && m.defect() < TOL);
                let sum =
                    [[p.m[0][0] + m.m[0][0], p.m[0][1] + m.m[0][1]], [p.m[1][0] + m.m[1][0], p.m[1][1] + m.m[1][1]]];
                assert!((sum[0][0] - 1.0).norm() < TOL && (sum[1][1] - 1.0).norm() < TOL);
                assert!(sum[0][1].norm() < TOL && sum[1][0].norm() < TOL);
            }
        }
    }

    #[test]
    fn equal_settings_are_anticorrelated() {
        let s = bell_state(BellKind::Singlet);
        let d = joint_probs_qm(&s, SpinKind::Half, 0.8, 0.8).unwrap();
        assert!(d.max_abs_diff(&JointDistribution { p_pp: 0.0, p_pm: 0.5, p_mp: 0.5, p_mm: 0.0 }) < TOL);
        let s = bell_state(BellKind::PhotonAnticorrelated);
        let d = joint_probs_qm(&s, SpinKind::Photon, 0.0, 0.0).unwrap();
        assert!(d.max_abs_diff(&JointDistribution { p_pp: 0.0, p_pm: 0.5, p_mp: 0.5, p_mm: 0.0 }) < TOL);
    }

    #[test]
    fn correlation_examples() {
        let ph = bell_state(BellKind::PhotonAnticorrelated);
        assert!((correlation_qm(&ph, SpinKind::Photon, FRAC_PI_2, 0.0).unwrap() - 1.0).abs() < TOL);
        assert!(correlation_qm(&ph, SpinKind::Photon, FRAC_PI_4, 0.0).unwrap().abs() < TOL);
        let sg = bell_state(BellKind::Singlet);
        for d in [0.0, 0.5, 1.7, PI, 4.0] {
            assert!((correlation_qm(&sg, SpinKind::Half, d, 0.0).unwrap() + d.cos()).abs() < TOL);
        }
    }

    #[test]
    fn unnormalized_state_rejected() {
        assert!(PureTwoParticleState::from_real([1.0, 1.0, 0.0, 0.0]).is_err());
        let bad = PureTwoParticleState { amps: [Complex64::new(0.5, 0.0); 4].map(|a| a * 1.1) };
        assert!(joint_probs_qm(&bad, SpinKind::Photon, 0.0, 0.0).is_err());
    }
}
