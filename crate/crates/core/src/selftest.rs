//! Acceptance checks over the whole library.
//!
//! Each criterion returns its verdict together with the artifacts it
//! produced. Artifacts carry no timings, so two runs with the same
//! configuration must agree byte for byte; [`run`] checks exactly that as
//! its last criterion.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_8, PI, SQRT_2};
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::amplitude::{
    bell_correlation_from_u, correlation_u, joint_distribution, AnalyzerSetting, PairSpec, SpinKind,
};
use crate::analysis::{model_correlation, scan_settings, uniform_grid, visibility};
use crate::cli::{chsh_bundle, chsh_text, hardy_report, scan_text, twoslit_report, twoslit_text, REPRODUCIBILITY_TOL};
use crate::config::{ExperimentConfig, OutputFormat};
use crate::continuum::{
    coincidence_pattern, fringe_visibility, pattern_period, single_marginal, DetectorPos, SlitGeometry,
};
use crate::error::Result;
use crate::events::{simulate, tally_by_setting, RunConfig, ScheduledSetting};
use crate::hardy_fit::FIT_SUCCESS_THRESHOLD;
use crate::oracle::HARDY_ZERO_TOL;
use crate::output::{fmt_f64, to_json, write_text};

pub const EQUIVALENCE_TOL: f64 = 1e-12;
pub const GRID_POINTS: usize = 1001;
pub const ANALYTIC_MARGINAL_TOL: f64 = 1e-15;
pub const MC_MARGINAL_TOL: f64 = 0.005;
pub const MC_SIGMAS: f64 = 5.0;
pub const CHSH_ANALYTIC_TOL: f64 = 1e-9;
pub const CHSH_MC_TOL: f64 = 0.01;
pub const VISIBILITY_TOL: f64 = 1e-12;
pub const QUADRATURE_TOL: f64 = 1e-9;
pub const PERIOD_TOL: f64 = 1e-9;
pub const MAXIMAL_FIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

fn artifact(name: &str, contents: String) -> Artifact {
    Artifact { name: name.to_owned(), contents }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CriterionResult {
    /// `PASS`/`FAIL` line without timing.
    pub fn line(&self) -> String {
        format!("[{}] {}. {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.detail)
    }
}

pub type CriterionOutput = (CriterionResult, Vec<Artifact>);

fn timed(
    id: u8,
    name: &'static str,
    f: impl FnOnce() -> Result<(bool, String, Vec<Artifact>)>,
) -> Result<CriterionOutput> {
    let start = Instant::now();
    let (passed, detail, artifacts) = f()?;
    Ok((CriterionResult { id, name, passed, detail, elapsed: start.elapsed() }, artifacts))
}

fn equivalence(species: SpinKind, expected: fn(f64) -> f64, file: &str) -> Result<(bool, String, Vec<Artifact>)> {
    let spec = PairSpec::canonical(species);
    let grid = uniform_grid(0.0, PI, GRID_POINTS);
    let mut closed = 0.0f64;
    for &d in &grid {
        let u = correlation_u(AnalyzerSetting::new(d)?, AnalyzerSetting::new(0.0)?, &spec);
        closed = closed.max((bell_correlation_from_u(u)? - expected(d)).abs());
    }
    let scan = scan_settings(&spec, &grid)?;
    let oracle = scan.max_abs_diff();
    let passed = closed <= EQUIVALENCE_TOL && oracle <= EQUIVALENCE_TOL;
    let detail = format!("max |P - closed form| = {}, max |P - Born rule| = {}", fmt_f64(closed), fmt_f64(oracle));
    Ok((passed, detail, vec![artifact(file, scan_text(&scan, OutputFormat::Csv)?)]))
}

pub fn criterion_1(_c: &ExperimentConfig) -> Result<CriterionOutput> {
    timed(1, "photon equivalence", || equivalence(SpinKind::Photon, |d| -(2.0 * d).cos(), "scan_photon.csv"))
}

pub fn criterion_2(_c: &ExperimentConfig) -> Result<CriterionOutput> {
    timed(2, "singlet equivalence", || equivalence(SpinKind::Half, |d| -d.cos(), "scan_half.csv"))
}

pub fn criterion_3(c: &ExperimentConfig) -> Result<CriterionOutput> {
    timed(3, "perfect (anti)correlation endpoints", || {
        let photon = PairSpec::photon_orthogonal();
        let singlet = PairSpec::singlet();
        let checks = [
            ("photon dtheta=0", model_correlation(&photon, 0.0, 0.0)?, -1.0),
            ("photon dtheta=0 (theta=1.1)", model_correlation(&photon, 1.1, 1.1)?, -1.0),
            ("singlet dtheta=0", model_correlation(&singlet, 0.0, 0.0)?, -1.0),
            ("singlet dtheta=pi", model_correlation(&singlet, PI, 0.0)?, 1.0),
        ];
        // Sampled: a parallel photon run must contain no coincidences.
        let run = RunConfig::new(c.seed, c.n_pairs.min(100_000), vec![ScheduledSetting::new(0.0, 0.0)], photon);
        let coincidences: u64 = tally_by_setting(&simulate(&run)?).iter().map(|t| t.coincidences).sum();
        let mut text = String::from("case,P,expected\n");
        for (label, p, e) in &checks {
            writeln!(text, "{label},{},{}", fmt_f64(*p), fmt_f64(*e)).expect("string write");
        }
        writeln!(text, "photon dtheta=0 sampled coincidences,{coincidences},0").expect("string write");
        let passed = checks.iter().all(|(_, p, e)| p == e) && coincidences == 0;
        let detail = checks.iter().map(|(l, p, _)| format!("{l}: {}", fmt_f64(*p))).collect::<Vec<_>>().join(", ")
            + &format!(", sampled photon coincidences: {coincidences}");
        Ok((passed, detail, vec![artifact("endpoints.csv", text)]))
    })
}

pub fn criterion_4(c: &ExperimentConfig) -> Result<CriterionOutput> {
    timed(4, "marginals", || {
        let grid = uniform_grid(-PI, PI, 41);
        let mut analytic = 0.0f64;
        for spec in [PairSpec::photon_orthogonal(), PairSpec::singlet()] {
            for &t1 in &grid {
                for &t2 in &grid {
                    let j = joint_distribution(AnalyzerSetting::new(t1)?, AnalyzerSetting::new(t2)?, &spec);
                    analytic = analytic.max((j.marginal_a_plus() - 0.5).abs()).max((j.marginal_b_plus() - 0.5).abs());
                }
            }
        }
        let mut text = String::from("species,theta1_rad,theta2_rad,n,a_plus_rate,b_plus_rate\n");
        let mut sampled = 0.0f64;
        for (spec, seed) in [(PairSpec::photon_orthogonal(), c.seed), (PairSpec::singlet(), c.seed.wrapping_add(1))] {
            let schedule = vec![ScheduledSetting::new(0.0, FRAC_PI_8), ScheduledSetting::new(1.0, -0.4)];
            let per = c.n_pairs / schedule.len() as u64;
            let events = simulate(&RunConfig::new(seed, per * schedule.len() as u64, schedule, spec))?;
            let n = events.len() as f64;
            let a = events.iter().filter(|e| e.a.value() == 1).count() as f64 / n;
            let b = events.iter().filter(|e| e.b.value() == 1).count() as f64 / n;
            sampled = sampled.max((a - 0.5).abs()).max((b - 0.5).abs());
            for t in tally_by_setting(&events) {
                writeln!(
                    text,
                    "{},{},{},{},{},{}",
                    spec.species,
                    fmt_f64(t.theta1),
                    fmt_f64(t.theta2),
                    t.n,
                    fmt_f64(t.a_plus_rate()),
                    fmt_f64(t.b_plus_rate())
                )
                .expect("string write");
            }
        }
        let passed = analytic <= ANALYTIC_MARGINAL_TOL && sampled <= MC_MARGINAL_TOL;
        let detail =
            format!("max analytic |m - 1/2| = {}, max sampled |m - 1/2| = {}", fmt_f64(analytic), fmt_f64(sampled));
        Ok((passed, detail, vec![artifact("marginals.csv", text)]))
    })
}

/// Setting pairs sampled by criterion 5, four per species.
pub fn consistency_settings() -> [(PairSpec, [(f64, f64); 4]); 2] {
    [
        (PairSpec::photon_orthogonal(), [(0.3, 0.3), (FRAC_PI_8, 0.0), (0.0, FRAC_PI_3), (1.7, 0.7)]),
        (PairSpec::singlet(), [(FRAC_PI_4, 0.0), (0.0, FRAC_PI_2), (2.2, 0.1), (PI, 0.0)]),
    ]
}

pub fn criterion_5(c: &ExperimentConfig) -> Result<CriterionOutput> {
    timed(5, "Monte Carlo consistency", || {
        let mut text = String::from("species,theta1_rad,theta2_rad,n,P,P_hat,bound,pass\n");
        let mut passed = true;
        let mut worst = 0.0f64;
        for (k, (spec, pairs)) in consistency_settings().into_iter().enumerate() {
            let schedule = pairs.iter().map(|&(a, b)| ScheduledSetting::new(a, b)).collect();
            let run = RunConfig::new(c.seed.wrapping_add(k as u64), 4 * c.n_pairs, schedule, spec);
            let tallies = tally_by_setting(&simulate(&run)?);
            for (t1, t2) in pairs {
                let t =
                    tallies.iter().find(|t| t.theta1 == t1 && t.theta2 == t2).expect("every scheduled pair is sampled");
                let p = model_correlation(&spec, t1, t2)?;
                let p_hat = t.correlation();
                let bound = MC_SIGMAS * ((1.0 - p * p).max(0.0) / t.n as f64).sqrt();
                let ok = (p_hat - p).abs() <= bound;
                passed &= ok;
                if bound > 0.0 {
                    worst = worst.max((p_hat - p).abs() / bound * MC_SIGMAS);
                }
                writeln!(
                    text,
                    "{},{},{},{},{},{},{},{ok}",
                    spec.species,
                    fmt_f64(t1),
                    fmt_f64(t2),
                    t.n,
                    fmt_f64(p),
                    fmt_f64(p_hat),
                    fmt_f64(bound)
                )
                .expect("string write");
            }
        }
        let detail = format!("8 setting pairs at N = {} each, worst deviation {} sigma", c.n_pairs, fmt_f64(worst));
        Ok((passed, detail, vec![artifact("mc_consistency.csv", text)]))
    })
}

pub fn criterion_6(c: &ExperimentConfig) -> Result<CriterionOutput> {
    timed(6, "CHSH", || {
        let mut passed = true;
        let mut parts = Vec::new();
        let mut artifacts = Vec::new();
        let target = 2.0 * SQRT_2;
        for species in [SpinKind::Photon, SpinKind::Half] {
            let cfg = ExperimentConfig { species, phi0: None, chsh: None, ..c.clone() };
            let b = chsh_bundle(&cfg)?;
            let lhv_bound = 2.0 + MC_SIGMAS * b.lhv_baseline.s_std_error.unwrap_or(0.0);
            passed &= (b.analytic.s - target).abs() <= CHSH_ANALYTIC_TOL
                && (b.monte_carlo.s - target).abs() <= CHSH_MC_TOL
                && b.lhv_baseline.s <= lhv_bound;
            parts.push(format!(
                "{species}: S = {} analytic, {} sampled, {} LHV (bound {})",
                fmt_f64(b.analytic.s),
                fmt_f64(b.monte_carlo.s),
                fmt_f64(b.lhv_baseline.s),
                fmt_f64(lhv_bound)
            ));
            artifacts.push(artifact(&format!("chsh_{}.json", species.label()), chsh_text(&b, OutputFormat::Json)?));
        }
        Ok((passed, parts.join("; "), artifacts))
    })
}

/// Mean of the coincidence pattern over one full period of `x₂`.
pub fn quadrature_marginal(x1: f64, geom: &SlitGeometry, nodes: usize) -> Result<f64> {
    let period = geom.nominal_period();
    let x1 = DetectorPos::new(x1)?;
    let mut sum = 0.0;
    for j in 0..nodes {
        sum += coincidence_pattern(x1, DetectorPos::new(geom.x0 + period * j as f64 / nodes as f64)?, geom);
    }
    Ok(sum / nodes as f64)
}

pub fn criterion_7(c: &ExperimentConfig) -> Result<CriterionOutput> {
    timed(7, "double slit", || {
        let geoms = [SlitGeometry::default(), SlitGeometry::new(12.5, 0.03, 2.0)?];
        let (mut vis_err, mut marg_err, mut period_err) = (0.0f64, 0.0f64, 0.0f64);
        for g in &geoms {
            let period = g.nominal_period();
            let samples: Vec<f64> = uniform_grid(0.0, period, GRID_POINTS)
                .into_iter()
                .map(|d| Ok(coincidence_pattern(DetectorPos::new(g.x0 + d)?, DetectorPos::new(g.x0)?, g)))
                .collect::<Result<_>>()?;
            vis_err = vis_err.max((visibility(&samples)? - 1.0).abs()).max((fringe_visibility(g) - 1.0).abs());
            for x1 in [g.x0, g.x0 + 0.37 * period, g.x0 - 1.9 * period] {
                marg_err = marg_err.max((quadrature_marginal(x1, g, 256)? - 0.5).abs());
                marg_err = marg_err.max((single_marginal(DetectorPos::new(x1)?, g) - 0.5).abs());
            }
            period_err = period_err.max((pattern_period(g) - period).abs());
        }
        let passed = vis_err <= VISIBILITY_TOL && marg_err <= QUADRATURE_TOL && period_err <= PERIOD_TOL;
        let detail = format!(
            "|V - 1| = {}, |marginal - 1/2| = {}, |period - 2pi/(alpha k)| = {}",
            fmt_f64(vis_err),
            fmt_f64(marg_err),
            fmt_f64(period_err)
        );
        let pattern = twoslit_text(&twoslit_report(c)?, OutputFormat::Csv)?;
        Ok((passed, detail, vec![artifact("twoslit.csv", pattern)]))
    })
}

pub fn criterion_8(c: &ExperimentConfig) -> Result<CriterionOutput> {
    timed(8, "Hardy", || {
        let r = hardy_report(c)?;
        let feasible = |s: &crate::oracle::HardySearch| {
            s.found().is_some_and(|h| h.max_zero() <= HARDY_ZERO_TOL && h.p_star > 0.0)
        };
        let maximal = r.maximal_fit.as_ref().map(|f| f.residual);
        let hardy = r.hardy_fit.as_ref().map(|f| f.residual);
        let passed = feasible(&r.coarse)
            && feasible(&r.fine)
            && r.reproducible
            && maximal.is_some_and(|m| m <= MAXIMAL_FIT_TOL)
            && hardy.is_some_and(f64::is_finite);
        let p_star = r.coarse.found().map(|h| fmt_f64(h.p_star)).unwrap_or_else(|| "none".into());
        let detail = format!(
            "p* = {p_star}, density difference = {} (tol {}), maximal-case residual = {}, Hardy-target residual = {} (threshold {} {})",
            r.p_star_difference.map(fmt_f64).unwrap_or_else(|| "n/a".into()),
            fmt_f64(REPRODUCIBILITY_TOL),
            maximal.map(fmt_f64).unwrap_or_else(|| "n/a".into()),
            hardy.map(fmt_f64).unwrap_or_else(|| "n/a".into()),
            fmt_f64(FIT_SUCCESS_THRESHOLD),
            if hardy.is_some_and(|h| h <= FIT_SUCCESS_THRESHOLD) { "met" } else { "not met" }
        );
        Ok((passed, detail, vec![artifact("hardy.json", to_json(&r)?)]))
    })
}

pub type CriterionFn = fn(&ExperimentConfig) -> Result<CriterionOutput>;

pub const CRITERIA: [CriterionFn; 8] =
    [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8];

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub criteria: Vec<CriterionResult>,
    pub artifacts: Vec<Artifact>,
}

fn run_once(c: &ExperimentConfig) -> Result<(Vec<CriterionResult>, Vec<Artifact>)> {
    let mut results = Vec::new();
    let mut artifacts = Vec::new();
    for f in CRITERIA {
        let (r, a) = f(c)?;
        results.push(r);
        artifacts.extend(a);
    }
    Ok((results, artifacts))
}

/// Runs every criterion twice and compares the artifacts of the two passes.
pub fn run(c: &ExperimentConfig) -> Result<SelftestReport> {
    let (mut criteria, artifacts) = run_once(c)?;
    let start = Instant::now();
    let (_, again) = run_once(c)?;
    let differing: Vec<&str> =
        artifacts.iter().zip(&again).filter(|(x, y)| x != y).map(|(x, _)| x.name.as_str()).collect();
    let passed = differing.is_empty() && artifacts.len() == again.len();
    let detail = if passed {
        format!("{} artifacts byte-identical across two runs", artifacts.len())
    } else {
        format!("artifacts differ: {}", differing.join(", "))
    };
    criteria.push(CriterionResult { id: 9, name: "determinism", passed, detail, elapsed: start.elapsed() });
    Ok(SelftestReport { criteria, artifacts })
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn summary_text(&self) -> String {
        let mut s: String = self.criteria.iter().map(|c| c.line() + "\n").collect();
        let n = self.criteria.iter().filter(|c| c.passed).count();
        writeln!(s, "{n}/{} criteria passed", self.criteria.len()).expect("string write");
        s
    }

    /// Summary with wall-clock times, for the terminal only.
    pub fn console_text(&self, dir: Option<&Path>) -> String {
        let mut s = String::new();
        for c in &self.criteria {
            writeln!(s, "{} ({:.3} s)", c.line(), c.elapsed.as_secs_f64()).expect("string write");
        }
        let n = self.criteria.iter().filter(|c| c.passed).count();
        writeln!(s, "{n}/{} criteria passed", self.criteria.len()).expect("string write");
        if let Some(d) = dir {
            writeln!(s, "-> {}", d.display()).expect("string write");
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        for a in &self.artifacts {
            write_text(&dir.join(&a.name), &a.contents)?;
        }
        write_text(&dir.join("summary.txt"), &self.summary_text())
    }
}
