//! Fits local complex amplitudes to the four Hardy joint probabilities.
//!
//! Each side and setting carries an amplitude per outcome,
//!
//! ```text
//! C_A(θ, o) = m(o)·exp(i·(s·θ + δ_A(o)))
//! C_B(θ, o) = m(o)·exp(i·(s·(θ − φ₀) + δ_B(o)))
//! ```
//!
//! with `m(+) = r`, `m(−) = √(1 − r²)`. The modeled joint probability is
//! `½·[Re 2·C_A·C_B*]²`: the squared amplitude correlation, shared equally
//! between the two outcome pairs of its class as in the maximal case. With
//! `r = 1/√2`, `δ(+) = 0`, `δ(−) = π/2` on both sides this reduces exactly to
//! [`joint_distribution`](crate::amplitude::joint_distribution).
//!
//! Fitting is multi-start Nelder–Mead over an unconstrained encoding of the
//! parameters, with a fixed iteration budget per start.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::amplitude::{joint_distribution, AnalyzerSetting, ComplexAmplitude, Outcome, PairSpec, SpinKind};
use crate::error::{domain, Result};
use crate::oracle::{HardyResult, HardySettings};

/// Residual at or below which a fit counts as reproducing its targets.
pub const FIT_SUCCESS_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_STARTS: usize = 32;
pub const DEFAULT_BUDGET: usize = 4000;
const NORMALIZATION_PENALTY: f64 = 1.0;
const PARAM_DIM: usize = 13;

/// Which setting on each side: 0 is unprimed, 1 is primed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyTarget {
    pub label: &'static str,
    pub a_setting: usize,
    pub b_setting: usize,
    pub a_outcome: Outcome,
    pub b_outcome: Outcome,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyTargets {
    pub species: SpinKind,
    pub settings: HardySettings,
    pub targets: [HardyTarget; 4],
}

const LABELS: [(&str, usize, usize, Outcome, Outcome); 4] = [
    ("P(a+,b+)", 0, 0, Outcome::Plus, Outcome::Plus),
    ("P(a+,b'-)", 0, 1, Outcome::Plus, Outcome::Minus),
    ("P(a'-,b+)", 1, 0, Outcome::Minus, Outcome::Plus),
    ("P(a'+,b'+)", 1, 1, Outcome::Plus, Outcome::Plus),
];

impl HardyTargets {
    pub fn new(species: SpinKind, settings: HardySettings, probabilities: [f64; 4]) -> Result<Self> {
        if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(domain(format!("target probability {p} outside [0, 1]")));
        }
        let targets = std::array::from_fn(|i| {
            let (label, a_setting, b_setting, a_outcome, b_outcome) = LABELS[i];
            HardyTarget { label, a_setting, b_setting, a_outcome, b_outcome, probability: probabilities[i] }
        });
        Ok(HardyTargets { species, settings, targets })
    }

    /// Targets taken verbatim from a Hardy search result.
    pub fn from_search(result: &HardyResult) -> Result<Self> {
        let [z1, z2, z3] = result.p_zero;
        Self::new(result.species, result.settings, [result.p_star, z1, z2, z3])
    }

    /// The same four labeled probabilities as predicted by the maximally
    /// entangled amplitude model for `spec` at `settings`.
    pub fn maximal(spec: &PairSpec, settings: HardySettings) -> Result<Self> {
        let probs = LABELS.map(|(_, ia, ib, oa, ob)| {
            let (ta, tb) = angles(&settings, ia, ib);
            (ta, tb, oa, ob)
        });
        let mut out = [0.0; 4];
        for (slot, (ta, tb, oa, ob)) in out.iter_mut().zip(probs) {
            *slot = joint_distribution(AnalyzerSetting::new(ta)?, AnalyzerSetting::new(tb)?, spec).prob(oa, ob);
        }
        Self::new(spec.species, settings, out)
    }

    /// Copy with target `index` replaced by `probability`.
    pub fn with_target(&self, index: usize, probability: f64) -> Result<Self> {
        let mut probs = self.targets.map(|t| t.probability);
        probs[index] = probability;
        Self::new(self.species, self.settings, probs)
    }
}

fn angles(settings: &HardySettings, ia: usize, ib: usize) -> (f64, f64) {
    let ta = if ia == 0 { settings.a } else { settings.a_prime };
    let tb = if ib == 0 { settings.b } else { settings.b_prime };
    (ta, tb)
}

/// Amplitude parameters for one side at one setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalAmplitudeParams {
    /// Magnitude of the `+` amplitude; the `−` amplitude has `√(1 − r²)`.
    pub r: f64,
    pub phase_plus: f64,
    pub phase_minus: f64,
}

impl LocalAmplitudeParams {
    pub fn magnitude(&self, o: Outcome) -> f64 {
        match o {
            Outcome::Plus => self.r,
            Outcome::Minus => (1.0 - self.r * self.r).max(0.0).sqrt(),
        }
    }

    pub fn phase(&self, o: Outcome) -> f64 {
        match o {
            Outcome::Plus => self.phase_plus,
            Outcome::Minus => self.phase_minus,
        }
    }

    /// Equal magnitudes, alternate outcome a quarter turn ahead.
    pub const fn symmetric() -> Self {
        LocalAmplitudeParams { r: FRAC_1_SQRT_2, phase_plus: 0.0, phase_minus: FRAC_PI_2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitParams {
    /// Indexed by setting: `[a, a′]`.
    pub side_a: [LocalAmplitudeParams; 2],
    /// Indexed by setting: `[b, b′]`.
    pub side_b: [LocalAmplitudeParams; 2],
    pub phi0: f64,
}

impl FitParams {
    /// Parameters under which the model reduces to the maximal closed form.
    pub const fn symmetric(phi0: f64) -> Self {
        let s = LocalAmplitudeParams::symmetric();
        FitParams { side_a: [s, s], side_b: [s, s], phi0 }
    }

    pub fn validate(&self) -> Result<()> {
        for p in self.side_a.iter().chain(&self.side_b) {
            if !(0.0..=1.0).contains(&p.r) {
                return Err(domain(format!("magnitude split r = {} outside [0, 1]", p.r)));
            }
            if !(p.phase_plus.is_finite() && p.phase_minus.is_finite()) {
                return Err(domain("non-finite amplitude phase"));
            }
        }
        crate::error::ensure_finite("phi0", self.phi0)?;
        Ok(())
    }

    #[cfg(test)]
    fn encode(&self) -> [f64; PARAM_DIM] {
        let mut v = [0.0; PARAM_DIM];
        for (k, p) in self.side_a.iter().chain(&self.side_b).enumerate() {
            v[3 * k] = (1.0 - 2.0 * p.r).clamp(-1.0, 1.0).acos();
            v[3 * k + 1] = p.phase_plus;
            v[3 * k + 2] = p.phase_minus;
        }
        v[12] = self.phi0;
        v
    }

    fn decode(v: &[f64; PARAM_DIM]) -> Self {
        let local = |k: usize| LocalAmplitudeParams {
            r: 0.5 * (1.0 - v[3 * k].cos()),
            phase_plus: v[3 * k + 1],
            phase_minus: v[3 * k + 2],
        };
        FitParams { side_a: [local(0), local(1)], side_b: [local(2), local(3)], phi0: v[12] }
    }
}

/// Modeled `P(o_A, o_B)` for setting indices `(ia, ib)`. Not clipped.
pub fn model_joint_prob(
    params: &FitParams,
    species: SpinKind,
    settings: &HardySettings,
    setting_pair: (usize, usize),
    outcome_pair: (Outcome, Outcome),
) -> f64 {
    let (ia, ib) = setting_pair;
    let (oa, ob) = outcome_pair;
    let (ta, tb) = angles(settings, ia, ib);
    let pa = &params.side_a[ia];
    let pb = &params.side_b[ib];
    let ca = ComplexAmplitude::from_polar(pa.magnitude(oa), species.scale(ta) + pa.phase(oa));
    let cb = ComplexAmplitude::from_polar(pb.magnitude(ob), species.scale(tb - params.phi0) + pb.phase(ob));
    let corr = 2.0 * (ca * cb.conj()).re;
    0.5 * corr * corr
}

fn setting_pair_total(params: &FitParams, targets: &HardyTargets, pair: (usize, usize)) -> f64 {
    Outcome::BOTH
        .iter()
        .flat_map(|&oa| Outcome::BOTH.iter().map(move |&ob| (oa, ob)))
        .map(|o| model_joint_prob(params, targets.species, &targets.settings, pair, o))
        .sum()
}

/// Squared target errors plus squared normalization defects of the four
/// setting pairs (weight 1).
fn objective(params: &FitParams, targets: &HardyTargets) -> f64 {
    let mut total = 0.0;
    for t in &targets.targets {
        let p = model_joint_prob(
            params,
            targets.species,
            &targets.settings,
            (t.a_setting, t.b_setting),
            (t.a_outcome, t.b_outcome),
        );
        total += (p - t.probability).powi(2);
    }
    for pair in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        total += NORMALIZATION_PENALTY * (setting_pair_total(params, targets, pair) - 1.0).powi(2);
    }
    total
}

fn normalization_defect(params: &FitParams, targets: &HardyTargets) -> f64 {
    [(0, 0), (0, 1), (1, 0), (1, 1)]
        .into_iter()
        .map(|pair| (setting_pair_total(params, targets, pair) - 1.0).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub settings: HardySettings,
    pub targets: [HardyTarget; 4],
    pub params: FitParams,
    /// Modeled probabilities for the four targets, same order.
    pub modeled: [f64; 4],
    /// Squared target errors plus squared normalization defects.
    pub residual: f64,
    /// Largest `|Σ_o P − 1|` over the four setting pairs.
    pub normalization_defect: f64,
    pub success_threshold: f64,
    pub success: bool,
    pub budget: usize,
    pub starts: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Nelder–Mead iterations per start.
    pub budget: usize,
    pub starts: usize,
    pub seed: u64,
}

impl FitOptions {
    pub fn new(budget: usize, seed: u64) -> Self {
        FitOptions { budget, starts: DEFAULT_STARTS, seed }
    }
}

fn start_point(seed: u64, index: usize) -> [f64; PARAM_DIM] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut v = [0.0; PARAM_DIM];
    for (i, x) in v.iter_mut().enumerate() {
        *x = if i < 12 && i % 3 == 0 { rng.gen::<f64>() * PI } else { rng.gen::<f64>() * TAU };
    }
    v
}

/// Multi-start local descent; deterministic in `(targets, options)`.
pub fn fit_local_amplitudes(targets: &HardyTargets, options: FitOptions) -> Result<FitResult> {
    if options.budget == 0 {
        return Err(domain("fit budget must be at least 1"));
    }
    if options.starts == 0 {
        return Err(domain("at least one start is required"));
    }
    let f = |v: &[f64; PARAM_DIM]| objective(&FitParams::decode(v), targets);
    let runs: Vec<([f64; PARAM_DIM], f64)> = (0..options.starts)
        .into_par_iter()
        .map(|k| nelder_mead(&f, start_point(options.seed, k), options.budget))
        .collect();
    // First minimum wins ties.
    let (best, residual) = runs
        .into_iter()
        .fold(None, |acc: Option<([f64; PARAM_DIM], f64)>, run| match acc {
            Some(a) if a.1 <= run.1 => Some(a),
            _ => Some(run),
        })
        .expect("at least one start");
    Ok(finish(targets, FitParams::decode(&best), residual, options))
}

/// Evaluates a given parameter set against `targets` without searching.
pub fn evaluate_fit(targets: &HardyTargets, params: FitParams) -> Result<FitResult> {
    params.validate()?;
    let residual = objective(&params, targets);
    Ok(finish(targets, params, residual, FitOptions { budget: 0, starts: 0, seed: 0 }))
}

fn finish(targets: &HardyTargets, params: FitParams, residual: f64, options: FitOptions) -> FitResult {
    let modeled = targets.targets.map(|t| {
        model_joint_prob(
            &params,
            targets.species,
            &targets.settings,
            (t.a_setting, t.b_setting),
            (t.a_outcome, t.b_outcome),
        )
    });
    FitResult {
        settings: targets.settings,
        targets: targets.targets,
        params,
        modeled,
        residual,
        normalization_defect: normalization_defect(&params, targets),
        success_threshold: FIT_SUCCESS_THRESHOLD,
        success: residual <= FIT_SUCCESS_THRESHOLD,
        budget: options.budget,
        starts: options.starts,
        seed: options.seed,
    }
}

/// Adaptive Nelder–Mead minimizer run for exactly `iterations` iterations.
/// The simplex is rebuilt around the incumbent whenever it collapses, so the
/// best value is non-increasing and a longer run extends a shorter one.
fn nelder_mead<F>(f: &F, start: [f64; PARAM_DIM], iterations: usize) -> ([f64; PARAM_DIM], f64)
where
    F: Fn(&[f64; PARAM_DIM]) -> f64,
{
    let n = PARAM_DIM as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / n, 0.75 - 1.0 / (2.0 * n), 1.0 - 1.0 / n);

    let build = |center: [f64; PARAM_DIM], step: f64| -> Vec<([f64; PARAM_DIM], f64)> {
        let mut s = vec![(center, f(&center))];
        for i in 0..PARAM_DIM {
            let mut v = center;
            v[i] += step;
            s.push((v, f(&v)));
        }
        s
    };
    let mut step = 0.5;
    let mut simplex = build(start, step);

    for _ in 0..iterations {
        simplex.sort_by(|l, r| l.1.total_cmp(&r.1));
        let best = simplex[0].1;
        let worst = simplex[PARAM_DIM].1;
        let size = simplex[1..]
            .iter()
            .map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if worst - best <= 1e-16 * best.abs().max(1e-300) || size < 1e-13 {
            if best == 0.0 {
                break;
            }
            step = (step * 0.1).max(1e-6);
            simplex = build(simplex[0].0, step);
            continue;
        }

        let mut centroid = [0.0; PARAM_DIM];
        for (v, _) in &simplex[..PARAM_DIM] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n;
            }
        }
        let along = |t: f64| -> [f64; PARAM_DIM] {
            let mut p = [0.0; PARAM_DIM];
            for i in 0..PARAM_DIM {
                p[i] = centroid[i] + t * (simplex[PARAM_DIM].0[i] - centroid[i]);
            }
            p
        };

        let xr = along(-alpha);
        let fr = f(&xr);
        let second_worst = simplex[PARAM_DIM - 1].1;
        if fr < best {
            let xe = along(-alpha * beta);
            let fe = f(&xe);
            simplex[PARAM_DIM] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < second_worst {
            simplex[PARAM_DIM] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let x = along(-alpha * gamma);
                let fx = f(&x);
                (x, fx)
            } else {
                let x = along(gamma);
                let fx = f(&x);
                (x, fx)
            };
            if fc < fr.min(worst) {
                simplex[PARAM_DIM] = (xc, fc);
            } else {
                let x0 = simplex[0].0;
                for (v, fv) in simplex.iter_mut().skip(1) {
                    for i in 0..PARAM_DIM {
                        v[i] = x0[i] + delta * (v[i] - x0[i]);
                    }
                    *fv = f(v);
                }
            }
        }
    }
    simplex.sort_by(|l, r| l.1.total_cmp(&r.1));
    simplex.swap_remove(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::hardy_search;

    fn settings() -> HardySettings {
        HardySettings { a: 0.3, a_prime: 1.1, b: -0.4, b_prime: 2.2 }
    }

    #[test]
    fn symmetric_params_reduce_to_model() {
        for spec in [PairSpec::photon_orthogonal(), PairSpec::singlet()] {
            let params = FitParams::symmetric(spec.phi0);
            let st = settings();
            for ia in 0..2 {
                for ib in 0..2 {
                    let (ta, tb) = angles(&st, ia, ib);
                    let d =
                        joint_distribution(AnalyzerSetting::new(ta).unwrap(), AnalyzerSetting::new(tb).unwrap(), &spec);
                    for oa in Outcome::BOTH {
                        for ob in Outcome::BOTH {
                            let p = model_joint_prob(&params, spec.species, &st, (ia, ib), (oa, ob));
                            assert!((p - d.prob(oa, ob)).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_magnitude_outcome_has_zero_probability() {
        let mut params = FitParams::symmetric(0.4);
        params.side_a[0].r = 1.0;
        let p = model_joint_prob(&params, SpinKind::Photon, &settings(), (0, 1), (Outcome::Minus, Outcome::Plus));
        assert_eq!(p, 0.0);
    }

    #[test]
    fn encoding_roundtrip() {
        let mut params = FitParams::symmetric(1.3);
        params.side_b[1] = LocalAmplitudeParams { r: 0.2, phase_plus: -0.5, phase_minus: 2.0 };
        let back = FitParams::decode(&params.encode());
        for (x, y) in back.side_b.iter().zip(&params.side_b) {
            assert!((x.r - y.r).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_budget_rejected() {
        let t = HardyTargets::maximal(&PairSpec::photon_orthogonal(), settings()).unwrap();
        assert!(fit_local_amplitudes(&t, FitOptions::new(0, 1)).is_err());
        assert!(HardyTargets::new(SpinKind::Photon, settings(), [1.5, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn maximal_targets_fit_to_closed_form_precision() {
        let t = HardyTargets::maximal(&PairSpec::photon_orthogonal(), settings()).unwrap();
        let exact = evaluate_fit(&t, FitParams::symmetric(PairSpec::photon_orthogonal().phi0)).unwrap();
        assert!(exact.residual < 1e-24);
        let fit = fit_local_amplitudes(&t, FitOptions::new(DEFAULT_BUDGET, 11)).unwrap();
        assert!(fit.residual <= 1e-10, "residual {}", fit.residual);
    }

    #[test]
    fn hardy_targets_from_search() {
        let h = hardy_search(12, 1e-10).unwrap();
        let t = HardyTargets::from_search(h.found().unwrap()).unwrap();
        assert!(t.targets[0].probability > 0.0);
        assert!(t.targets[1..].iter().all(|x| x.probability <= 1e-10));
    }
}
