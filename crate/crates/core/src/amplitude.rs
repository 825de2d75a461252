//! Local complex-amplitude model for maximally entangled pairs.
//!
//! Each particle carries an internal phase `φ`; the partner carries
//! `φ + φ₀`. The analyzer angle referred to that phase sets the phase of a
//! local amplitude of magnitude `1/√2`. Combining the two local amplitudes
//! gives the correlation amplitude
//!
//! ```text
//! U(θ₁, θ₂) = Re 2·C₁·C₂* = cos(s·(θ₁ − θ₂) + s·φ₀)
//! ```
//!
//! whose square is the coincidence probability. The individual `φ` cancels,
//! so nothing in a [`JointDistribution`] depends on it.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure_finite, Result};

/// Tolerance for analytic comparisons between closed forms.
pub const ANALYTIC_TOL: f64 = 1e-12;
/// Tolerance for amplitude-magnitude checks.
pub const MAGNITUDE_TOL: f64 = 1e-15;

/// Particle species, fixing the spin magnitude `s` (units of ℏ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinKind {
    /// Polarization-entangled photons, `s = 1`.
    Photon,
    /// Spin-½ particles, `s = 1/2`.
    Half,
}

impl SpinKind {
    /// Spin magnitude as an exact fraction `(numerator, denominator)`.
    pub const fn spin(self) -> (u32, u32) {
        match self {
            SpinKind::Photon => (1, 1),
            SpinKind::Half => (1, 2),
        }
    }

    /// `s · angle`. The denominator is applied as an exact power-of-two
    /// division rather than through a rounded `0.5` constant shared with the
    /// photon path.
    pub fn scale(self, angle: f64) -> f64 {
        let (num, den) = self.spin();
        angle * f64::from(num) / f64::from(den)
    }

    pub fn label(self) -> &'static str {
        match self {
            SpinKind::Photon => "photon",
            SpinKind::Half => "half",
        }
    }
}

impl fmt::Display for SpinKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for SpinKind {
    type Err = crate::QcorrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "photon" => Ok(SpinKind::Photon),
            "half" | "spin-half" | "spin_half" => Ok(SpinKind::Half),
            other => Err(crate::QcorrError::Config(format!("unknown species `{other}` (expected photon|half)"))),
        }
    }
}

/// One entangled-pair family: species plus the source phase offset `φ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub species: SpinKind,
    pub phi0: f64,
}

impl PairSpec {
    pub fn new(species: SpinKind, phi0: f64) -> Result<Self> {
        ensure_finite("phi0", phi0)?;
        Ok(PairSpec { species, phi0 })
    }

    /// Photons emitted in orthogonal polarizations, `φ₀ = π/2`.
    pub const fn photon_orthogonal() -> Self {
        PairSpec { species: SpinKind::Photon, phi0: FRAC_PI_2 }
    }

    /// Spin-½ singlet, `φ₀ = π`.
    pub const fn singlet() -> Self {
        PairSpec { species: SpinKind::Half, phi0: PI }
    }

    /// Canonical pair family for a species.
    pub const fn canonical(species: SpinKind) -> Self {
        match species {
            SpinKind::Photon => Self::photon_orthogonal(),
            SpinKind::Half => Self::singlet(),
        }
    }
}

/// Lab-frame analyzer orientation in radians. Not reduced modulo 2π.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnalyzerSetting(f64);

impl AnalyzerSetting {
    pub fn new(theta: f64) -> Result<Self> {
        ensure_finite("analyzer angle", theta).map(AnalyzerSetting)
    }

    pub const fn theta(self) -> f64 {
        self.0
    }
}

/// A complex number `re + i·im`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexAmplitude {
    pub re: f64,
    pub im: f64,
}

impl ComplexAmplitude {
    pub const fn new(re: f64, im: f64) -> Self {
        ComplexAmplitude { re, im }
    }

    pub fn from_polar(magnitude: f64, phase: f64) -> Self {
        let (sin, cos) = phase.sin_cos();
        ComplexAmplitude { re: magnitude * cos, im: magnitude * sin }
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn conj(self) -> Self {
        ComplexAmplitude { re: self.re, im: -self.im }
    }

    pub fn scale(self, factor: f64) -> Self {
        ComplexAmplitude { re: self.re * factor, im: self.im * factor }
    }
}

impl Mul for ComplexAmplitude {
    type Output = ComplexAmplitude;

    fn mul(self, rhs: Self) -> Self {
        ComplexAmplitude { re: self.re * rhs.re - self.im * rhs.im, im: self.re * rhs.im + self.im * rhs.re }
    }
}

/// Two-valued analyzer result: transmission (+1) or absorption (−1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub const fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(domain(format!("outcome must be +1 or -1, got {other}"))),
        }
    }

    pub const fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

/// Probabilities of the four outcome pairs for one setting pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl JointDistribution {
    pub fn prob(&self, a: Outcome, b: Outcome) -> f64 {
        match (a, b) {
            (Outcome::Plus, Outcome::Plus) => self.p_pp,
            (Outcome::Plus, Outcome::Minus) => self.p_pm,
            (Outcome::Minus, Outcome::Plus) => self.p_mp,
            (Outcome::Minus, Outcome::Minus) => self.p_mm,
        }
    }

    /// Probabilities in the order (++, +−, −+, −−).
    pub fn as_array(&self) -> [f64; 4] {
        [self.p_pp, self.p_pm, self.p_mp, self.p_mm]
    }

    pub fn total(&self) -> f64 {
        self.p_pp + self.p_pm + self.p_mp + self.p_mm
    }

    /// Expected outcome product, `Σ o₁·o₂·p`.
    pub fn correlation(&self) -> f64 {
        self.p_pp + self.p_mm - self.p_pm - self.p_mp
    }

    pub fn marginal_a_plus(&self) -> f64 {
        self.p_pp + self.p_pm
    }

    pub fn marginal_b_plus(&self) -> f64 {
        self.p_pp + self.p_mp
    }

    /// Checks nonnegativity and normalization to within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let probs = self.as_array();
        if probs.iter().any(|&p| p.is_nan() || p < -tol) {
            return Err(domain(format!("negative probability in {probs:?}")));
        }
        let total = self.total();
        if (total - 1.0).abs() > tol {
            return Err(domain(format!("joint distribution sums to {total}")));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &JointDistribution) -> f64 {
        self.as_array().iter().zip(other.as_array()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }
}

/// Local transmission amplitude `(1/√2)·exp(i·s·(θ − φ))` for a particle with
/// internal phase `phi` meeting an analyzer at `setting`.
pub fn local_amplitude(setting: AnalyzerSetting, species: SpinKind, phi: f64) -> Result<ComplexAmplitude> {
    ensure_finite("internal phase", phi)?;
    let phase = species.scale(setting.theta() - phi);
    Ok(ComplexAmplitude::from_polar(FRAC_1_SQRT_2, phase))
}

/// Correlation amplitude `U = cos(s·(θ₁ − θ₂) + s·φ₀)`.
pub fn correlation_u(theta1: AnalyzerSetting, theta2: AnalyzerSetting, spec: &PairSpec) -> f64 {
    let s = spec.species;
    (s.scale(theta1.theta() - theta2.theta()) + s.scale(spec.phi0)).cos()
}

/// Coincidence probability `U²`.
pub fn coincidence_probability(u: f64) -> Result<f64> {
    check_unit_range(u)?;
    Ok(u * u)
}

/// Bell correlation `P = 2U² − 1`.
pub fn bell_correlation_from_u(u: f64) -> Result<f64> {
    check_unit_range(u)?;
    Ok(2.0 * u * u - 1.0)
}

fn check_unit_range(u: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(domain(format!("correlation amplitude must lie in [-1, 1], got {u}")))
    }
}

/// Joint outcome distribution predicted by the model. Coincidence mass `U²`
/// is shared equally between `++` and `−−`, anticoincidence mass between
/// `+−` and `−+`.
pub fn joint_distribution(theta1: AnalyzerSetting, theta2: AnalyzerSetting, spec: &PairSpec) -> JointDistribution {
    let u = correlation_u(theta1, theta2, spec);
    let coinc = u * u;
    let same = 0.5 * coinc;
    let opposite = 0.5 * (1.0 - coinc);
    JointDistribution { p_pp: same, p_pm: opposite, p_mp: opposite, p_mm: same }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn setting(t: f64) -> AnalyzerSetting {
        AnalyzerSetting::new(t).unwrap()
    }

    #[test]
    fn local_amplitude_examples() {
        let c = local_amplitude(setting(0.0), SpinKind::Photon, 0.0).unwrap();
        assert!((c.re - FRAC_1_SQRT_2).abs() < MAGNITUDE_TOL && c.im.abs() < MAGNITUDE_TOL);
        let c = local_amplitude(setting(FRAC_PI_2), SpinKind::Photon, 0.0).unwrap();
        assert!(c.re.abs() < MAGNITUDE_TOL && (c.im - FRAC_1_SQRT_2).abs() < MAGNITUDE_TOL);
        for species in [SpinKind::Photon, SpinKind::Half] {
            for t in [0.1, 1.3, 2.9] {
                let c = local_amplitude(setting(t), species, 0.0).unwrap();
                assert!((c.norm_sqr() - 0.5).abs() <= MAGNITUDE_TOL);
            }
        }
    }

    #[test]
    fn non_finite_inputs_rejected() {
        assert!(AnalyzerSetting::new(f64::NAN).is_err());
        assert!(AnalyzerSetting::new(f64::INFINITY).is_err());
        assert!(PairSpec::new(SpinKind::Half, f64::NEG_INFINITY).is_err());
        assert!(local_amplitude(setting(0.0), SpinKind::Half, f64::NAN).is_err());
    }

    #[test]
    fn half_spin_scaling_is_exact() {
        assert_eq!(SpinKind::Half.scale(PI + PI), PI);
        assert_eq!(SpinKind::Photon.scale(1.25), 1.25);
    }

    #[test]
    fn photon_correlation_is_minus_sine() {
        let spec = PairSpec::photon_orthogonal();
        assert!(correlation_u(setting(0.3), setting(0.3), &spec).abs() < ANALYTIC_TOL);
        for d in [-2.0, -0.4, 0.0, 0.7, 1.9, 5.5] {
            let u = correlation_u(setting(d + 0.2), setting(0.2), &spec);
            assert!((u + d.sin()).abs() < ANALYTIC_TOL, "d={d}");
        }
    }

    #[test]
    fn singlet_opposite_analyzers() {
        let u = correlation_u(setting(PI), setting(0.0), &PairSpec::singlet());
        assert_eq!(u, -1.0);
    }

    #[test]
    fn coincidence_probability_examples() {
        assert_eq!(coincidence_probability(0.0).unwrap(), 0.0);
        let u = correlation_u(setting(FRAC_PI_4), setting(0.0), &PairSpec::photon_orthogonal());
        assert!((coincidence_probability(u).unwrap() - 0.5).abs() < ANALYTIC_TOL);
        let u = correlation_u(setting(FRAC_PI_2), setting(0.0), &PairSpec::singlet());
        assert!((coincidence_probability(u).unwrap() - 0.5).abs() < ANALYTIC_TOL);
        assert!(coincidence_probability(1.5).is_err());
        assert!(coincidence_probability(f64::NAN).is_err());
    }

    #[test]
    fn bell_correlation_examples() {
        assert_eq!(bell_correlation_from_u(0.0).unwrap(), -1.0);
        assert!(bell_correlation_from_u(-1.0001).is_err());
        for d in [0.0, 0.3, 1.1, 2.5] {
            let u = correlation_u(setting(d), setting(0.0), &PairSpec::photon_orthogonal());
            let p = bell_correlation_from_u(u).unwrap();
            assert!((p + (2.0 * d).cos()).abs() < ANALYTIC_TOL);
            let u = correlation_u(setting(d), setting(0.0), &PairSpec::singlet());
            let p = bell_correlation_from_u(u).unwrap();
            assert!((p + d.cos()).abs() < ANALYTIC_TOL);
        }
    }

    #[test]
    fn joint_distribution_examples() {
        let d = joint_distribution(setting(0.0), setting(0.0), &PairSpec::photon_orthogonal());
        assert!(d.max_abs_diff(&JointDistribution { p_pp: 0.0, p_pm: 0.5, p_mp: 0.5, p_mm: 0.0 }) < ANALYTIC_TOL);
        let d = joint_distribution(setting(PI), setting(0.0), &PairSpec::singlet());
        assert_eq!(d.as_array(), [0.5, 0.0, 0.0, 0.5]);
        let d = joint_distribution(setting(FRAC_PI_4), setting(0.0), &PairSpec::photon_orthogonal());
        assert!(d.max_abs_diff(&JointDistribution { p_pp: 0.25, p_pm: 0.25, p_mp: 0.25, p_mm: 0.25 }) < ANALYTIC_TOL);
    }

    #[test]
    fn outcome_values() {
        assert_eq!(Outcome::from_value(1).unwrap(), Outcome::Plus);
        assert_eq!(Outcome::from_value(-1).unwrap(), Outcome::Minus);
        assert!(Outcome::from_value(0).is_err());
        assert_eq!(Outcome::Plus.flip().value(), -1);
    }
}
