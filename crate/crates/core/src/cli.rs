//! Command-line experiments.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::amplitude::{PairSpec, SpinKind};
use crate::analysis::{chsh_analytic, chsh_lhv, chsh_monte_carlo, scan_settings, ChshReport, ScanReport};
use crate::config::{parse_angle, ExperimentConfig, OutputFormat};
use crate::continuum::{fringe_visibility, pattern_period, sample_pattern, write_pattern_csv, SlitGeometry};
use crate::error::{QcorrError, Result};
use crate::events::{
    coincidence_match, simulate, station_streams, tally_by_setting, write_matched_csv, write_station_events_csv,
    SettingTally,
};
use crate::hardy_fit::{fit_local_amplitudes, FitOptions, FitResult, HardyTargets};
use crate::oracle::{hardy_search, HardySearch};
use crate::output::{fmt_f64, to_json, write_text};
use crate::selftest;

#[derive(Debug, Parser)]
#[command(name = "qcorr", version, about = "Reproducible entangled-pair correlation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Model vs Born-rule correlation over a relative-angle grid.
    Scan(CommonArgs),
    /// CHSH statistic: analytic, Monte Carlo and local-hidden-variable baseline.
    Chsh(CommonArgs),
    /// Simulated station event streams and their coincidence join.
    Events(CommonArgs),
    /// Double-slit coincidence fringe.
    Twoslit(CommonArgs),
    /// Hardy configuration search and local-amplitude fit.
    Hardy(CommonArgs),
    /// Acceptance checks with artifacts.
    Selftest(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Key-value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` assignment, applied after the file (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "n-pairs")]
    pub n_pairs: Option<u64>,
    #[arg(long)]
    pub species: Option<String>,
    /// Radians; accepts forms like `pi/2`.
    #[arg(long, allow_hyphen_values = true)]
    pub phi0: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
}

impl CommonArgs {
    /// Defaults, then the file, then `--set`, then named flags.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        for a in &self.set {
            c.apply_assignment(a)?;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(n) = self.n_pairs {
            c.n_pairs = n;
        }
        if let Some(s) = &self.species {
            c.species = s.parse()?;
        }
        if let Some(p) = &self.phi0 {
            c.phi0 = Some(parse_angle(p)?);
        }
        if let Some(o) = &self.out {
            c.out = Some(o.clone());
        }
        if let Some(f) = &self.format {
            c.format = Some(f.parse()?);
        }
        Ok(c)
    }
}

/// Process exit status for an error.
pub fn exit_code(err: &QcorrError) -> i32 {
    match err {
        QcorrError::Config(_) | QcorrError::Domain(_) => 2,
        QcorrError::Integrity(_) | QcorrError::Numerical(_) => 3,
        QcorrError::Io(_) => 4,
    }
}

/// Reads `QCORR_THREADS`; `None` means automatic.
pub fn thread_count(value: Option<&str>) -> Result<Option<usize>> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(QcorrError::Config(format!("QCORR_THREADS must be a non-negative integer, got {v:?}"))),
        },
    }
}

/// Runs a parsed command, returning the lines to print on stdout.
pub fn run(command: &Command) -> Result<(String, i32)> {
    match command {
        Command::Scan(a) => cmd_scan(&a.resolve()?),
        Command::Chsh(a) => cmd_chsh(&a.resolve()?),
        Command::Events(a) => cmd_events(&a.resolve()?),
        Command::Twoslit(a) => cmd_twoslit(&a.resolve()?),
        Command::Hardy(a) => cmd_hardy(&a.resolve()?),
        Command::Selftest(a) => cmd_selftest(&a.resolve()?),
    }
    .map(|(text, ok)| (text, if ok { 0 } else { 3 }))
}

fn out_path(c: &ExperimentConfig, default: &str) -> PathBuf {
    c.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn csv_only(c: &ExperimentConfig, what: &str) -> Result<()> {
    match c.format {
        Some(OutputFormat::Json) => Err(QcorrError::Config(format!("{what} output is CSV only"))),
        _ => Ok(()),
    }
}

fn json_only(c: &ExperimentConfig, what: &str) -> Result<()> {
    match c.format {
        Some(OutputFormat::Csv) => Err(QcorrError::Config(format!("{what} output is JSON only"))),
        _ => Ok(()),
    }
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    String::from_utf8(buf).map_err(|e| QcorrError::Numerical(e.to_string()))
}

/// Scan with the optional Monte Carlo column.
pub fn scan_report(c: &ExperimentConfig) -> Result<ScanReport> {
    let grid = c.scan_grid()?;
    let mut report = scan_settings(&c.spec()?, &grid)?;
    if c.scan_mc_pairs > 0 {
        report.add_monte_carlo(c.scan_mc_pairs, c.seed)?;
    }
    Ok(report)
}

pub fn scan_text(report: &ScanReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => csv_string(|b| report.write_csv(b)),
        OutputFormat::Json => to_json(report),
    }
}

pub fn cmd_scan(c: &ExperimentConfig) -> Result<(String, bool)> {
    let report = scan_report(c)?;
    let format = c.format.unwrap_or_default();
    let path = out_path(c, if format == OutputFormat::Json { "scan.json" } else { "scan.csv" });
    write_text(&path, &scan_text(&report, format)?)?;
    Ok((
        format!(
            "scan: {} {} points, max |model - oracle| = {} -> {}\n",
            report.spec.species,
            report.points.len(),
            fmt_f64(report.max_abs_diff()),
            path.display()
        ),
        true,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChshBundle {
    pub spec: PairSpec,
    pub n_per_pair: u64,
    pub seed: u64,
    pub analytic: ChshReport,
    pub monte_carlo: ChshReport,
    pub lhv_baseline: ChshReport,
}

pub fn chsh_bundle(c: &ExperimentConfig) -> Result<ChshBundle> {
    let spec = c.spec()?;
    let settings = c.chsh_settings()?;
    if c.n_pairs == 0 {
        return Err(QcorrError::Config("n_pairs must be at least 1".into()));
    }
    Ok(ChshBundle {
        spec,
        n_per_pair: c.n_pairs,
        seed: c.seed,
        analytic: chsh_analytic(&spec, &settings)?,
        monte_carlo: chsh_monte_carlo(&spec, &settings, c.n_pairs, c.seed)?,
        lhv_baseline: chsh_lhv(&settings, c.n_pairs, c.seed)?,
    })
}

pub const CHSH_CSV_HEADER: &str = "source,S,s_std_error,E_ab,E_abp,E_apb,E_apbp";

pub fn chsh_text(b: &ChshBundle, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => to_json(b),
        OutputFormat::Csv => {
            let mut s = format!("{CHSH_CSV_HEADER}\n");
            for r in [&b.analytic, &b.monte_carlo, &b.lhv_baseline] {
                let err = r.s_std_error.map(fmt_f64).unwrap_or_default();
                let e: Vec<String> = r.pairs.iter().map(|p| fmt_f64(p.p)).collect();
                writeln!(s, "{},{},{},{}", r.source, fmt_f64(r.s), err, e.join(",")).expect("string write");
            }
            Ok(s)
        }
    }
}

pub fn cmd_chsh(c: &ExperimentConfig) -> Result<(String, bool)> {
    let bundle = chsh_bundle(c)?;
    let format = c.format.unwrap_or(OutputFormat::Json);
    let path = out_path(c, if format == OutputFormat::Json { "chsh.json" } else { "chsh.csv" });
    write_text(&path, &chsh_text(&bundle, format)?)?;
    let mut s = String::new();
    for r in [&bundle.analytic, &bundle.monte_carlo, &bundle.lhv_baseline] {
        writeln!(s, "chsh {}: S = {}", r.source, fmt_f64(r.s)).expect("string write");
    }
    writeln!(s, "-> {}", path.display()).expect("string write");
    Ok((s, true))
}

/// Station-stream CSV, matched CSV and per-setting tallies for a run.
pub fn events_artifacts(c: &ExperimentConfig) -> Result<(String, String, Vec<SettingTally>)> {
    let events = simulate(&c.run_config()?)?;
    let (a, b) = station_streams(&events);
    let report = coincidence_match(&a, &b)?;
    if report.unmatched() > 0 {
        return Err(QcorrError::Integrity(format!("{} unmatched station events", report.unmatched())));
    }
    let streams = csv_string(|w| write_station_events_csv(w, &[&a, &b]))?;
    let matched = csv_string(|w| write_matched_csv(w, &report.matched))?;
    Ok((streams, matched, tally_by_setting(&report.matched)))
}

pub fn cmd_events(c: &ExperimentConfig) -> Result<(String, bool)> {
    csv_only(c, "events")?;
    let (streams, matched, tallies) = events_artifacts(c)?;
    let dir = out_path(c, "events");
    write_text(&dir.join("events.csv"), &streams)?;
    write_text(&dir.join("matched.csv"), &matched)?;
    let mut s = String::new();
    for t in &tallies {
        writeln!(
            s,
            "events ({}, {}): n = {}, coincidences = {}, P = {}, A+ = {}, B+ = {}",
            fmt_f64(t.theta1),
            fmt_f64(t.theta2),
            t.n,
            t.coincidences,
            fmt_f64(t.correlation()),
            fmt_f64(t.a_plus_rate()),
            fmt_f64(t.b_plus_rate())
        )
        .expect("string write");
    }
    writeln!(s, "-> {}", dir.display()).expect("string write");
    Ok((s, true))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoslitReport {
    pub geometry: SlitGeometry,
    pub visibility: f64,
    pub period: f64,
    pub nominal_period: f64,
    pub samples: Vec<(f64, f64)>,
}

pub fn twoslit_report(c: &ExperimentConfig) -> Result<TwoslitReport> {
    let geometry = c.geometry()?;
    Ok(TwoslitReport {
        geometry,
        visibility: fringe_visibility(&geometry),
        period: pattern_period(&geometry),
        nominal_period: geometry.nominal_period(),
        samples: sample_pattern(&geometry, &c.dx_grid()?)?,
    })
}

pub fn twoslit_text(r: &TwoslitReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => csv_string(|w| write_pattern_csv(w, &r.samples)),
        OutputFormat::Json => to_json(r),
    }
}

pub fn cmd_twoslit(c: &ExperimentConfig) -> Result<(String, bool)> {
    let r = twoslit_report(c)?;
    let format = c.format.unwrap_or_default();
    let path = out_path(c, if format == OutputFormat::Json { "twoslit.json" } else { "twoslit.csv" });
    write_text(&path, &twoslit_text(&r, format)?)?;
    Ok((
        format!(
            "twoslit: visibility = {}, period = {} (nominal {}) -> {}\n",
            fmt_f64(r.visibility),
            fmt_f64(r.period),
            fmt_f64(r.nominal_period),
            path.display()
        ),
        true,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyReport {
    pub coarse_density: usize,
    pub fine_density: usize,
    pub coarse: HardySearch,
    pub fine: HardySearch,
    /// `|p*_coarse − p*_fine|` when both searches succeed.
    pub p_star_difference: Option<f64>,
    pub reproducible: bool,
    /// Fit to the maximally entangled model's own probabilities at the
    /// Hardy settings.
    pub maximal_fit: Option<FitResult>,
    pub hardy_fit: Option<FitResult>,
}

pub const REPRODUCIBILITY_TOL: f64 = 1e-6;

pub fn hardy_report(c: &ExperimentConfig) -> Result<HardyReport> {
    c.validate_hardy()?;
    let coarse = hardy_search(c.hardy_density_coarse, c.refine_tolerance)?;
    let fine = hardy_search(c.hardy_density_fine, c.refine_tolerance)?;
    let p_star_difference = match (coarse.found(), fine.found()) {
        (Some(x), Some(y)) => Some((x.p_star - y.p_star).abs()),
        _ => None,
    };
    let options = FitOptions { budget: c.fit_budget, starts: c.fit_starts, seed: c.seed };
    let (maximal_fit, hardy_fit) = match coarse.found() {
        Some(r) => {
            let maximal = HardyTargets::maximal(&PairSpec::canonical(SpinKind::Photon), r.settings)?;
            (
                Some(fit_local_amplitudes(&maximal, options)?),
                Some(fit_local_amplitudes(&HardyTargets::from_search(r)?, options)?),
            )
        }
        None => (None, None),
    };
    Ok(HardyReport {
        coarse_density: c.hardy_density_coarse,
        fine_density: c.hardy_density_fine,
        coarse,
        fine,
        p_star_difference,
        reproducible: p_star_difference.is_some_and(|d| d <= REPRODUCIBILITY_TOL),
        maximal_fit,
        hardy_fit,
    })
}

pub fn cmd_hardy(c: &ExperimentConfig) -> Result<(String, bool)> {
    json_only(c, "hardy")?;
    let r = hardy_report(c)?;
    let path = out_path(c, "hardy.json");
    write_text(&path, &to_json(&r)?)?;
    let mut s = String::new();
    for (label, search) in [("coarse", &r.coarse), ("fine", &r.fine)] {
        match search {
            HardySearch::Found(h) => {
                writeln!(s, "hardy {label}: p* = {}, max zero = {}", fmt_f64(h.p_star), fmt_f64(h.max_zero()))
            }
            HardySearch::NoSolution { best_p_star, .. } => {
                writeln!(s, "hardy {label}: no solution (best p* {})", fmt_f64(*best_p_star))
            }
        }
        .expect("string write");
    }
    for (label, fit) in [("maximal fit", &r.maximal_fit), ("hardy fit", &r.hardy_fit)] {
        if let Some(f) = fit {
            writeln!(
                s,
                "{label}: residual = {} (threshold {} {})",
                fmt_f64(f.residual),
                fmt_f64(f.success_threshold),
                if f.success { "met" } else { "not met" }
            )
            .expect("string write");
        }
    }
    writeln!(s, "-> {}", path.display()).expect("string write");
    Ok((s, true))
}

pub fn cmd_selftest(c: &ExperimentConfig) -> Result<(String, bool)> {
    let dir = out_path(c, "selftest");
    let report = selftest::run(c)?;
    report.write(&dir)?;
    Ok((report.console_text(Some(Path::new(&dir))), report.all_passed()))
}
