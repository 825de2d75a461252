//! CHSH statistic, model-versus-oracle setting scans and fringe visibility.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::amplitude::{bell_correlation_from_u, correlation_u, AnalyzerSetting, PairSpec, SpinKind};
use crate::error::{domain, QcorrError, Result};
use crate::events::{simulate, tally_by_setting, RunConfig, ScheduledSetting};
use crate::oracle::{bell_state, correlation_qm, BellKind};
use crate::output::fmt_f64;

/// Classical CHSH bound.
pub const CHSH_LOCAL_BOUND: f64 = 2.0;
/// Algebraic maximum of the CHSH combination.
pub const CHSH_ALGEBRAIC_BOUND: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshSettings {
    pub fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("a_prime", a_prime), ("b", b), ("b_prime", b_prime)] {
            crate::error::ensure_finite(name, v)?;
        }
        Ok(ChshSettings { a, a_prime, b, b_prime })
    }

    /// Maximizing angles: `(0, π/4, π/8, 3π/8)` for photons,
    /// `(0, π/2, π/4, 3π/4)` for spin-½.
    pub fn canonical(species: SpinKind) -> Self {
        match species {
            SpinKind::Photon => ChshSettings { a: 0.0, a_prime: FRAC_PI_4, b: FRAC_PI_8, b_prime: 3.0 * FRAC_PI_8 },
            SpinKind::Half => ChshSettings { a: 0.0, a_prime: FRAC_PI_2, b: FRAC_PI_4, b_prime: 3.0 * FRAC_PI_4 },
        }
    }

    /// Setting pairs in the order `(a,b), (a,b′), (a′,b), (a′,b′)`.
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [(self.a, self.b), (self.a, self.b_prime), (self.a_prime, self.b), (self.a_prime, self.b_prime)]
    }
}

/// `|E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)|` with values given in
/// [`ChshSettings::pairs`] order.
pub fn chsh_from_values(e: [f64; 4]) -> f64 {
    (e[0] - e[1] + e[2] + e[3]).abs()
}

/// CHSH statistic from any correlation source. `None` from the source means
/// the value is missing.
pub fn chsh_statistic<F>(correlation: F, settings: &ChshSettings) -> Result<f64>
where
    F: Fn(f64, f64) -> Option<f64>,
{
    let mut e = [0.0; 4];
    for (slot, (t1, t2)) in e.iter_mut().zip(settings.pairs()) {
        *slot =
            correlation(t1, t2).ok_or_else(|| domain(format!("no correlation value for setting pair ({t1}, {t2})")))?;
    }
    Ok(chsh_from_values(e))
}

/// Model Bell correlation `2U² − 1` at a setting pair.
pub fn model_correlation(spec: &PairSpec, theta1: f64, theta2: f64) -> Result<f64> {
    let u = correlation_u(AnalyzerSetting::new(theta1)?, AnalyzerSetting::new(theta2)?, spec);
    bell_correlation_from_u(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshPair {
    pub theta1: f64,
    pub theta2: f64,
    #[serde(rename = "P")]
    pub p: f64,
    /// Events behind `p`; absent for analytic values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshReport {
    pub source: String,
    pub settings: ChshSettings,
    pub pairs: Vec<ChshPair>,
    #[serde(rename = "S")]
    pub s: f64,
    pub bound_violated: bool,
    /// One-sigma Monte Carlo error on S, when sampled.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_std_error: Option<f64>,
}

impl ChshReport {
    fn from_pairs(source: &str, settings: ChshSettings, pairs: Vec<ChshPair>) -> Self {
        let s = chsh_from_values([pairs[0].p, pairs[1].p, pairs[2].p, pairs[3].p]);
        let s_std_error = pairs
            .iter()
            .map(|p| p.n.map(|n| (1.0 - p.p * p.p).max(0.0) / n as f64))
            .sum::<Option<f64>>()
            .map(f64::sqrt);
        ChshReport { source: source.to_owned(), settings, pairs, s, bound_violated: s > CHSH_LOCAL_BOUND, s_std_error }
    }
}

pub fn chsh_analytic(spec: &PairSpec, settings: &ChshSettings) -> Result<ChshReport> {
    let pairs = settings
        .pairs()
        .into_iter()
        .map(|(t1, t2)| Ok(ChshPair { theta1: t1, theta2: t2, p: model_correlation(spec, t1, t2)?, n: None }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChshReport::from_pairs("model_analytic", *settings, pairs))
}

fn chsh_sampled(
    source: &str,
    settings: &ChshSettings,
    spec: PairSpec,
    n_per_pair: u64,
    seed: u64,
    run: fn(&RunConfig) -> Result<Vec<crate::events::PairEvent>>,
) -> Result<ChshReport> {
    if n_per_pair == 0 {
        return Err(domain("n_per_pair must be at least 1"));
    }
    let schedule = settings.pairs().map(|(t1, t2)| ScheduledSetting::new(t1, t2)).to_vec();
    let config = RunConfig::new(seed, 4 * n_per_pair, schedule, spec);
    let tallies = tally_by_setting(&run(&config)?);
    let pairs = settings
        .pairs()
        .into_iter()
        .map(|(t1, t2)| {
            tallies
                .iter()
                .find(|t| t.theta1 == t1 && t.theta2 == t2)
                .map(|t| ChshPair { theta1: t1, theta2: t2, p: t.correlation(), n: Some(t.n) })
                .ok_or_else(|| domain(format!("no events recorded for ({t1}, {t2})")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChshReport::from_pairs(source, *settings, pairs))
}

/// Monte Carlo CHSH for the amplitude model, `n_per_pair` events per setting
/// pair under a cyclic schedule.
pub fn chsh_monte_carlo(spec: &PairSpec, settings: &ChshSettings, n_per_pair: u64, seed: u64) -> Result<ChshReport> {
    chsh_sampled("model_monte_carlo", settings, *spec, n_per_pair, seed, simulate)
}

/// Monte Carlo CHSH for the deterministic local-hidden-variable model.
pub fn chsh_lhv(settings: &ChshSettings, n_per_pair: u64, seed: u64) -> Result<ChshReport> {
    chsh_sampled("lhv_baseline", settings, PairSpec::singlet(), n_per_pair, seed, crate::events::simulate_lhv)
}

/// `n` evenly spaced points from `min` to `max` inclusive.
pub fn uniform_grid(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { max } else { min + step * i as f64 }).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub dtheta_rad: f64,
    pub model_p: f64,
    pub oracle_e: f64,
    pub mc_p: Option<f64>,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub spec: PairSpec,
    pub points: Vec<ScanPoint>,
}

pub const SCAN_HEADER: &str = "dtheta_rad,model_P,oracle_E,mc_P,abs_diff";

impl ScanReport {
    pub fn max_abs_diff(&self) -> f64 {
        self.points.iter().map(|p| p.abs_diff).fold(0.0, f64::max)
    }

    /// Fills `mc_p` with a Monte Carlo estimate per grid point. Point `i`
    /// uses seed `seed + i`.
    pub fn add_monte_carlo(&mut self, n_per_point: u64, seed: u64) -> Result<()> {
        if n_per_point == 0 {
            return Err(domain("n_per_point must be at least 1"));
        }
        for (i, p) in self.points.iter_mut().enumerate() {
            let config = RunConfig::new(
                seed.wrapping_add(i as u64),
                n_per_point,
                vec![ScheduledSetting::new(p.dtheta_rad, 0.0)],
                self.spec,
            );
            p.mc_p = Some(crate::events::estimate_bell_correlation(&simulate(&config)?)?);
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{SCAN_HEADER}")?;
        for p in &self.points {
            let mc = p.mc_p.map(fmt_f64).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(p.dtheta_rad),
                fmt_f64(p.model_p),
                fmt_f64(p.oracle_e),
                mc,
                fmt_f64(p.abs_diff)
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a scan CSV. The `abs_diff` column is recomputed from the model
    /// and oracle columns rather than trusted.
    pub fn read_csv<R: BufRead>(r: R, spec: PairSpec) -> Result<Self> {
        let mut lines = r.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim_end() == SCAN_HEADER => {}
            _ => return Err(QcorrError::Integrity(format!("expected header `{SCAN_HEADER}`"))),
        }
        let mut points = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || QcorrError::Integrity(format!("line {}: malformed scan row", i + 2));
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            let (dtheta_rad, model_p, oracle_e) = (num(f[0])?, num(f[1])?, num(f[2])?);
            let mc_p = if f[3].is_empty() { None } else { Some(num(f[3])?) };
            points.push(ScanPoint { dtheta_rad, model_p, oracle_e, mc_p, abs_diff: (model_p - oracle_e).abs() });
        }
        Ok(ScanReport { spec, points })
    }
}

/// Tabulates model `P` against the Born-rule `E` over `grid` of relative
/// angles `Δθ = θ₁ − θ₂` (θ₂ = 0). The oracle state is the reference Bell
/// state of the species.
pub fn scan_settings(spec: &PairSpec, grid: &[f64]) -> Result<ScanReport> {
    if grid.is_empty() {
        return Err(domain("scan grid is empty"));
    }
    let state = bell_state(BellKind::for_species(spec.species));
    let points = grid
        .iter()
        .map(|&d| {
            let model_p = model_correlation(spec, d, 0.0)?;
            let oracle_e = correlation_qm(&state, spec.species, d, 0.0)?;
            Ok(ScanPoint { dtheta_rad: d, model_p, oracle_e, mc_p: None, abs_diff: (model_p - oracle_e).abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanReport { spec: *spec, points })
}

/// `(max − min)/(max + min)` over a sampled nonnegative pattern.
pub fn visibility(pattern: &[f64]) -> Result<f64> {
    if pattern.is_empty() {
        return Err(domain("pattern is empty"));
    }
    if let Some(bad) = pattern.iter().find(|&&v| v < 0.0 || !v.is_finite()) {
        return Err(domain(format!("pattern must be finite and nonnegative, found {bad}")));
    }
    let max = pattern.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = pattern.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        return Err(domain("pattern is identically zero"));
    }
    Ok((max - min) / (max + min))
}

/// Visibility of `mean + amplitude·cos(x)` from its exact extrema.
pub fn visibility_analytic(mean: f64, amplitude: f64) -> Result<f64> {
    let amp = amplitude.abs();
    if !(mean.is_finite() && amp.is_finite()) || mean - amp < 0.0 {
        return Err(domain(format!("pattern {mean} + {amplitude} cos x is not nonnegative")));
    }
    if mean == 0.0 {
        return Err(domain("pattern is identically zero"));
    }
    Ok(amp / mean)
}
