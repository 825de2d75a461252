//! Flat `key = value` experiment configuration.
//!
//! Files hold one assignment per line; `#` starts a comment. Overrides are
//! applied in order on top of the defaults, so later assignments win. Angle
//! values accept plain numbers or multiples of `pi` such as `3pi/8`,
//! `-pi/2` or `2*pi`.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::amplitude::{PairSpec, SpinKind};
use crate::analysis::{uniform_grid, ChshSettings};
use crate::continuum::SlitGeometry;
use crate::error::{QcorrError, Result};
use crate::events::{PhiDistribution, RunConfig, ScheduleMode, ScheduledSetting};
use crate::hardy_fit::{DEFAULT_BUDGET, DEFAULT_STARTS};

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_N_PAIRS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = QcorrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(config_err(format!("unknown format {other:?}, expected csv or json"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub species: SpinKind,
    /// Pair phase offset; the species' canonical value when unset.
    pub phi0: Option<f64>,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    /// Monte Carlo events per scan point; 0 disables the column.
    pub scan_mc_pairs: u64,
    pub n_pairs: u64,
    pub seed: u64,
    /// CHSH angles `a, a', b, b'`; canonical for the species when unset.
    pub chsh: Option<[f64; 4]>,
    pub settings: Vec<ScheduledSetting>,
    pub schedule: ScheduleMode,
    pub phi_distribution: PhiDistribution,
    pub k: f64,
    pub alpha: f64,
    pub x0: f64,
    pub dx_min: f64,
    pub dx_max: f64,
    pub dx_points: usize,
    pub hardy_density_coarse: usize,
    pub hardy_density_fine: usize,
    pub refine_tolerance: f64,
    pub fit_budget: usize,
    pub fit_starts: usize,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            species: SpinKind::Photon,
            phi0: None,
            grid_min: 0.0,
            grid_max: PI,
            grid_points: 1001,
            scan_mc_pairs: 0,
            n_pairs: DEFAULT_N_PAIRS,
            seed: DEFAULT_SEED,
            chsh: None,
            settings: vec![ScheduledSetting::new(0.0, 0.0)],
            schedule: ScheduleMode::Cyclic,
            phi_distribution: PhiDistribution::Uniform,
            k: 1.0,
            alpha: 1.0,
            x0: 0.0,
            dx_min: -2.0 * PI,
            dx_max: 2.0 * PI,
            dx_points: 1001,
            hardy_density_coarse: 16,
            hardy_density_fine: 29,
            refine_tolerance: 1e-10,
            fit_budget: DEFAULT_BUDGET,
            fit_starts: DEFAULT_STARTS,
            out: None,
            format: None,
        }
    }
}

/// Keys accepted in files and `--set` overrides.
pub const KEYS: &[&str] = &[
    "species",
    "phi0",
    "grid_min",
    "grid_max",
    "grid_points",
    "scan_mc_pairs",
    "n_pairs",
    "seed",
    "chsh_a",
    "chsh_a_prime",
    "chsh_b",
    "chsh_b_prime",
    "settings",
    "schedule",
    "phi_distribution",
    "k",
    "alpha",
    "x0",
    "dx_min",
    "dx_max",
    "dx_points",
    "hardy_density_coarse",
    "hardy_density_fine",
    "refine_tolerance",
    "fit_budget",
    "fit_starts",
    "out",
    "format",
];

fn config_err(msg: impl Into<String>) -> QcorrError {
    QcorrError::Config(msg.into())
}

/// Parses a radian value: a float, or `[c][*]pi[/d]` with optional sign.
pub fn parse_angle(s: &str) -> Result<f64> {
    let t = s.trim();
    let bad = || config_err(format!("invalid angle {t:?}"));
    let v = if let Some(pos) = t.find("pi") {
        let (head, tail) = (t[..pos].trim().trim_end_matches('*').trim(), t[pos + 2..].trim());
        let coef = match head {
            "" | "+" => 1.0,
            "-" => -1.0,
            h => h.parse::<f64>().map_err(|_| bad())?,
        };
        let den = match tail {
            "" => 1.0,
            d => d.strip_prefix('/').ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?,
        };
        coef * PI / den
    } else {
        t.parse::<f64>().map_err(|_| bad())?
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| config_err(format!("{key}: cannot parse {v:?}")))
}

fn parse_real(key: &str, v: &str) -> Result<f64> {
    let x: f64 = parse_num(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(config_err(format!("{key} must be finite")))
    }
}

/// `t1:t2[:w]` entries separated by commas or semicolons.
fn parse_settings(v: &str) -> Result<Vec<ScheduledSetting>> {
    let entries: Vec<&str> = v.split([',', ';']).map(str::trim).filter(|e| !e.is_empty()).collect();
    entries
        .into_iter()
        .map(|e| {
            let parts: Vec<&str> = e.split(':').collect();
            match parts.as_slice() {
                [t1, t2] => Ok(ScheduledSetting::new(parse_angle(t1)?, parse_angle(t2)?)),
                [t1, t2, w] => Ok(ScheduledSetting {
                    weight: parse_real("settings weight", w)?,
                    ..ScheduledSetting::new(parse_angle(t1)?, parse_angle(t2)?)
                }),
                _ => Err(config_err(format!("settings entry {e:?} is not theta1:theta2[:weight]"))),
            }
        })
        .collect()
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let chsh_slot = |c: &mut Self, i: usize| -> Result<()> {
            let mut angles = c.chsh_angles();
            angles[i] = parse_angle(v)?;
            c.chsh = Some(angles);
            Ok(())
        };
        match key {
            "species" => self.species = v.parse()?,
            "phi0" => self.phi0 = Some(parse_angle(v)?),
            "grid_min" => self.grid_min = parse_angle(v)?,
            "grid_max" => self.grid_max = parse_angle(v)?,
            "grid_points" => self.grid_points = parse_num(key, v)?,
            "scan_mc_pairs" => self.scan_mc_pairs = parse_num(key, v)?,
            "n_pairs" => self.n_pairs = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "chsh_a" => chsh_slot(self, 0)?,
            "chsh_a_prime" => chsh_slot(self, 1)?,
            "chsh_b" => chsh_slot(self, 2)?,
            "chsh_b_prime" => chsh_slot(self, 3)?,
            "settings" => self.settings = parse_settings(v)?,
            "schedule" => {
                self.schedule = match v.to_ascii_lowercase().as_str() {
                    "cyclic" => ScheduleMode::Cyclic,
                    "random" => ScheduleMode::Random,
                    other => return Err(config_err(format!("unknown schedule {other:?}"))),
                }
            }
            "phi_distribution" => {
                self.phi_distribution = match v.to_ascii_lowercase().as_str() {
                    "uniform" => PhiDistribution::Uniform,
                    c => PhiDistribution::Constant(parse_angle(c)?),
                }
            }
            "k" => self.k = parse_real(key, v)?,
            "alpha" => self.alpha = parse_real(key, v)?,
            "x0" => self.x0 = parse_real(key, v)?,
            "dx_min" => self.dx_min = parse_real(key, v)?,
            "dx_max" => self.dx_max = parse_real(key, v)?,
            "dx_points" => self.dx_points = parse_num(key, v)?,
            "hardy_density_coarse" => self.hardy_density_coarse = parse_num(key, v)?,
            "hardy_density_fine" => self.hardy_density_fine = parse_num(key, v)?,
            "refine_tolerance" => self.refine_tolerance = parse_real(key, v)?,
            "fit_budget" => self.fit_budget = parse_num(key, v)?,
            "fit_starts" => self.fit_starts = parse_num(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "format" => self.format = Some(v.parse()?),
            other => return Err(config_err(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` (or `key = value`) assignments.
    pub fn apply_assignment(&mut self, line: &str) -> Result<()> {
        let (k, v) = line.split_once('=').ok_or_else(|| config_err(format!("expected key = value, got {line:?}")))?;
        self.set(k.trim(), v)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_assignment(line).map_err(|e| match e {
                QcorrError::Config(m) => config_err(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)?;
        self.apply_text(&text)
    }

    pub fn spec(&self) -> Result<PairSpec> {
        let phi0 = self.phi0.unwrap_or(PairSpec::canonical(self.species).phi0);
        PairSpec::new(self.species, phi0).map_err(|e| config_err(e.to_string()))
    }

    pub fn chsh_angles(&self) -> [f64; 4] {
        self.chsh.unwrap_or_else(|| {
            let c = ChshSettings::canonical(self.species);
            [c.a, c.a_prime, c.b, c.b_prime]
        })
    }

    pub fn chsh_settings(&self) -> Result<ChshSettings> {
        let [a, ap, b, bp] = self.chsh_angles();
        ChshSettings::new(a, ap, b, bp).map_err(|e| config_err(e.to_string()))
    }

    pub fn scan_grid(&self) -> Result<Vec<f64>> {
        if self.grid_points == 0 {
            return Err(config_err("scan grid is empty (grid_points = 0)"));
        }
        if self.grid_min > self.grid_max {
            return Err(config_err("grid_min exceeds grid_max"));
        }
        Ok(uniform_grid(self.grid_min, self.grid_max, self.grid_points))
    }

    pub fn dx_grid(&self) -> Result<Vec<f64>> {
        if self.dx_points == 0 {
            return Err(config_err("pattern grid is empty (dx_points = 0)"));
        }
        if self.dx_min > self.dx_max {
            return Err(config_err("dx_min exceeds dx_max"));
        }
        Ok(uniform_grid(self.dx_min, self.dx_max, self.dx_points))
    }

    pub fn geometry(&self) -> Result<SlitGeometry> {
        SlitGeometry::new(self.k, self.alpha, self.x0).map_err(|e| config_err(e.to_string()))
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        if self.n_pairs == 0 {
            return Err(config_err("n_pairs must be at least 1"));
        }
        let mut rc = RunConfig::new(self.seed, self.n_pairs, self.settings.clone(), self.spec()?);
        rc.schedule_mode = self.schedule;
        rc.phi_distribution = self.phi_distribution;
        rc.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(rc)
    }

    pub fn validate_hardy(&self) -> Result<()> {
        if self.hardy_density_coarse < 8 || self.hardy_density_fine < 8 {
            return Err(config_err("hardy grid densities must be at least 8"));
        }
        if self.refine_tolerance.is_nan() || self.refine_tolerance <= 0.0 {
            return Err(config_err("refine_tolerance must be positive"));
        }
        if self.fit_budget == 0 || self.fit_starts == 0 {
            return Err(config_err("fit_budget and fit_starts must be at least 1"));
        }
        Ok(())
    }
}
