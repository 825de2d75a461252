//! Seeded Monte Carlo generation of pair events at two stations.
//!
//! There is no factorized per-station sampling rule that reproduces `U²`, so
//! each pair's outcomes are drawn jointly from
//! [`joint_distribution`](crate::amplitude::joint_distribution). What leaves
//! the engine is a pair of station streams carrying only local data (tag,
//! setting, outcome); correlations are recovered afterwards by joining on the
//! tag, as a classical channel would.
//!
//! Every pair owns a ChaCha substream keyed by `(seed, pair_id)`, so results
//! do not depend on thread count or evaluation order.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::io::{BufRead, Write};

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitude::{joint_distribution, AnalyzerSetting, Outcome, PairSpec};
use crate::error::{domain, QcorrError, Result};
use crate::output::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Station {
    A,
    B,
}

impl fmt::Display for Station {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Station::A => "A",
            Station::B => "B",
        })
    }
}

/// One emitted pair: its ordinal and the internal phase carried by the
/// first particle (the second carries `phi + spec.phi0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairRecord {
    pub pair_id: u64,
    pub phi: f64,
    pub spec: PairSpec,
}

/// A local measurement record as seen at one station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationEvent {
    pub station: Station,
    pub pair_tag: u64,
    pub setting: AnalyzerSetting,
    pub outcome: Outcome,
}

/// Both outcomes of one pair with the settings they were measured at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEvent {
    pub pair_tag: u64,
    pub theta1: f64,
    pub theta2: f64,
    pub a: Outcome,
    pub b: Outcome,
}

impl PairEvent {
    pub fn product(&self) -> i8 {
        self.a.value() * self.b.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledSetting {
    pub theta1: f64,
    pub theta2: f64,
    pub weight: f64,
}

impl ScheduledSetting {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        ScheduledSetting { theta1, theta2, weight: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    /// Smooth weighted round robin; plain round robin for equal weights.
    #[default]
    Cyclic,
    /// Weighted categorical draw from each pair's own substream.
    Random,
}

/// How the first particle's internal phase is drawn. Statistics must not
/// depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum PhiDistribution {
    #[default]
    Uniform,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub n_pairs: u64,
    pub settings_schedule: Vec<ScheduledSetting>,
    pub schedule_mode: ScheduleMode,
    pub spec: PairSpec,
    pub phi_distribution: PhiDistribution,
}

impl RunConfig {
    pub fn new(seed: u64, n_pairs: u64, settings_schedule: Vec<ScheduledSetting>, spec: PairSpec) -> Self {
        RunConfig {
            seed,
            n_pairs,
            settings_schedule,
            schedule_mode: ScheduleMode::Cyclic,
            spec,
            phi_distribution: PhiDistribution::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.settings_schedule.is_empty() {
            return Err(domain("settings schedule is empty"));
        }
        for s in &self.settings_schedule {
            if !(s.theta1.is_finite() && s.theta2.is_finite()) {
                return Err(domain(format!("non-finite scheduled setting ({}, {})", s.theta1, s.theta2)));
            }
            if !(s.weight > 0.0 && s.weight.is_finite()) {
                return Err(domain(format!("schedule weight must be positive and finite, got {}", s.weight)));
            }
        }
        if !self.spec.phi0.is_finite() {
            return Err(domain("phi0 must be finite"));
        }
        if let PhiDistribution::Constant(phi) = self.phi_distribution {
            if !(0.0..TAU).contains(&phi) {
                return Err(domain(format!("constant phi must lie in [0, 2pi), got {phi}")));
            }
        }
        Ok(())
    }
}

/// Per-pair random draws, always consumed in the same order so that
/// changing one use (e.g. the phi distribution) never shifts another.
struct PairDraws {
    phi_unit: f64,
    measure: f64,
    schedule: f64,
}

fn pair_draws(seed: u64, pair_id: u64) -> PairDraws {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pair_id);
    PairDraws { phi_unit: rng.gen::<f64>(), measure: rng.sample(Open01), schedule: rng.gen::<f64>() }
}

fn phi_from(dist: PhiDistribution, unit: f64) -> f64 {
    match dist {
        PhiDistribution::Uniform => {
            let phi = unit * TAU;
            if phi < TAU {
                phi
            } else {
                0.0
            }
        }
        PhiDistribution::Constant(phi) => phi,
    }
}

/// Lazily yields the pairs of a run. Empty when `n_pairs == 0`.
pub fn generate_pairs(config: &RunConfig) -> impl Iterator<Item = PairRecord> + '_ {
    (0..config.n_pairs).map(move |pair_id| PairRecord {
        pair_id,
        phi: phi_from(config.phi_distribution, pair_draws(config.seed, pair_id).phi_unit),
        spec: config.spec,
    })
}

/// Smallest value produced by the `(0, 1)` sampler used for measurement
/// draws. Probabilities below it (e.g. the `cos²(π/2) ≈ 4e-33` rounding
/// residue at perfect anticorrelation) are never selected.
pub const SMALLEST_DRAW: f64 = 1.0 / (1u64 << 53) as f64;

/// Samples one outcome pair from the model distribution using a uniform
/// draw in `(0, 1)`. Cumulative order is `++, +−, −+, −−`, so station A
/// reads `+` exactly when `draw < P(A = +) = 1/2`.
pub fn measure_pair(
    pair: &PairRecord,
    theta1: AnalyzerSetting,
    theta2: AnalyzerSetting,
    draw: f64,
) -> (Outcome, Outcome) {
    let d = joint_distribution(theta1, theta2, &pair.spec);
    let c1 = d.p_pp;
    let c2 = c1 + d.p_pm;
    let c3 = c2 + d.p_mp;
    if draw < c1 {
        (Outcome::Plus, Outcome::Plus)
    } else if draw < c2 {
        (Outcome::Plus, Outcome::Minus)
    } else if draw < c3 {
        (Outcome::Minus, Outcome::Plus)
    } else {
        (Outcome::Minus, Outcome::Minus)
    }
}

/// Deterministic local response `sign(cos(θ − λ))`, with `+1` on the
/// boundary.
pub fn lhv_baseline_measure(lambda: f64, theta: f64) -> Outcome {
    if (theta - lambda).cos() >= 0.0 {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

/// Setting index for every pair under the cyclic schedule.
fn cyclic_assignment(schedule: &[ScheduledSetting], n: u64) -> Vec<u16> {
    let total: f64 = schedule.iter().map(|s| s.weight).sum();
    let mut current = vec![0.0; schedule.len()];
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let mut pick = 0;
        for (k, s) in schedule.iter().enumerate() {
            current[k] += s.weight;
            if current[k] > current[pick] {
                pick = k;
            }
        }
        current[pick] -= total;
        out.push(pick as u16);
    }
    out
}

fn random_pick(schedule: &[ScheduledSetting], unit: f64) -> usize {
    let total: f64 = schedule.iter().map(|s| s.weight).sum();
    let target = unit * total;
    let mut acc = 0.0;
    for (k, s) in schedule.iter().enumerate() {
        acc += s.weight;
        if target < acc {
            return k;
        }
    }
    schedule.len() - 1
}

fn run_with<F>(config: &RunConfig, measure: F) -> Result<Vec<PairEvent>>
where
    F: Fn(&PairRecord, &ScheduledSetting, &PairDraws) -> (Outcome, Outcome) + Sync,
{
    config.validate()?;
    if config.settings_schedule.len() > usize::from(u16::MAX) {
        return Err(domain("settings schedule has too many entries"));
    }
    let cyclic = match config.schedule_mode {
        ScheduleMode::Cyclic => Some(cyclic_assignment(&config.settings_schedule, config.n_pairs)),
        ScheduleMode::Random => None,
    };
    let events = (0..config.n_pairs)
        .into_par_iter()
        .map(|pair_id| {
            let draws = pair_draws(config.seed, pair_id);
            let pair =
                PairRecord { pair_id, phi: phi_from(config.phi_distribution, draws.phi_unit), spec: config.spec };
            let k = match &cyclic {
                Some(assign) => usize::from(assign[pair_id as usize]),
                None => random_pick(&config.settings_schedule, draws.schedule),
            };
            let setting = &config.settings_schedule[k];
            let (a, b) = measure(&pair, setting, &draws);
            PairEvent { pair_tag: pair_id, theta1: setting.theta1, theta2: setting.theta2, a, b }
        })
        .collect();
    Ok(events)
}

/// Runs the amplitude model over the configured schedule.
pub fn simulate(config: &RunConfig) -> Result<Vec<PairEvent>> {
    run_with(config, |pair, setting, draws| {
        // Validated finite in `RunConfig::validate`.
        let t1 = AnalyzerSetting::new(setting.theta1).expect("finite");
        let t2 = AnalyzerSetting::new(setting.theta2).expect("finite");
        measure_pair(pair, t1, t2, draws.measure)
    })
}

/// Runs the deterministic local-hidden-variable model. The per-pair
/// `λ = phi` is uniform on [0, 2π) under the default phi distribution.
pub fn simulate_lhv(config: &RunConfig) -> Result<Vec<PairEvent>> {
    run_with(config, |pair, setting, _| {
        (lhv_baseline_measure(pair.phi, setting.theta1), lhv_baseline_measure(pair.phi, setting.theta2))
    })
}

/// Splits joint events into the two local views.
pub fn station_streams(events: &[PairEvent]) -> (Vec<StationEvent>, Vec<StationEvent>) {
    let local = |station, tag, theta: f64, outcome| StationEvent {
        station,
        pair_tag: tag,
        setting: AnalyzerSetting::new(theta).expect("events carry finite settings"),
        outcome,
    };
    events
        .iter()
        .map(|e| (local(Station::A, e.pair_tag, e.theta1, e.a), local(Station::B, e.pair_tag, e.theta2, e.b)))
        .unzip()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchReport {
    /// Joined records, ordered by tag.
    pub matched: Vec<PairEvent>,
    pub unmatched_a: Vec<u64>,
    pub unmatched_b: Vec<u64>,
}

impl MatchReport {
    pub fn unmatched(&self) -> usize {
        self.unmatched_a.len() + self.unmatched_b.len()
    }
}

fn index_stream(events: &[StationEvent], station: Station) -> Result<BTreeMap<u64, &StationEvent>> {
    let mut map = BTreeMap::new();
    for e in events {
        if e.station != station {
            return Err(QcorrError::Integrity(format!("event for station {} in stream {station}", e.station)));
        }
        if map.insert(e.pair_tag, e).is_some() {
            return Err(QcorrError::Integrity(format!("duplicate pair tag {} in stream {station}", e.pair_tag)));
        }
    }
    Ok(map)
}

/// Joins the two station streams on pair tag. Input order is irrelevant.
pub fn coincidence_match(stream_a: &[StationEvent], stream_b: &[StationEvent]) -> Result<MatchReport> {
    let a = index_stream(stream_a, Station::A)?;
    let mut b = index_stream(stream_b, Station::B)?;
    let mut report = MatchReport::default();
    for (tag, ea) in a {
        match b.remove(&tag) {
            Some(eb) => report.matched.push(PairEvent {
                pair_tag: tag,
                theta1: ea.setting.theta(),
                theta2: eb.setting.theta(),
                a: ea.outcome,
                b: eb.outcome,
            }),
            None => report.unmatched_a.push(tag),
        }
    }
    report.unmatched_b = b.into_keys().collect();
    Ok(report)
}

/// `P̂ = (N_coinc − N_anti)/N = (1/N)·Σ AᵢBᵢ`.
pub fn estimate_bell_correlation(matched: &[PairEvent]) -> Result<f64> {
    if matched.is_empty() {
        return Err(domain("cannot estimate a correlation from zero events"));
    }
    let sum: i64 = matched.iter().map(|e| i64::from(e.product())).sum();
    Ok(sum as f64 / matched.len() as f64)
}

/// Counts for one setting pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SettingTally {
    pub theta1: f64,
    pub theta2: f64,
    pub n: u64,
    pub coincidences: u64,
    pub anticoincidences: u64,
    pub a_plus: u64,
    pub b_plus: u64,
}

impl SettingTally {
    pub fn correlation(&self) -> f64 {
        (self.coincidences as f64 - self.anticoincidences as f64) / self.n as f64
    }

    pub fn a_plus_rate(&self) -> f64 {
        self.a_plus as f64 / self.n as f64
    }

    pub fn b_plus_rate(&self) -> f64 {
        self.b_plus as f64 / self.n as f64
    }
}

/// Groups matched events by setting pair, ordered by `(theta1, theta2)`.
pub fn tally_by_setting(matched: &[PairEvent]) -> Vec<SettingTally> {
    let mut groups: BTreeMap<(u64, u64), SettingTally> = BTreeMap::new();
    for e in matched {
        let key = (order_key(e.theta1), order_key(e.theta2));
        let t = groups.entry(key).or_insert(SettingTally {
            theta1: e.theta1,
            theta2: e.theta2,
            n: 0,
            coincidences: 0,
            anticoincidences: 0,
            a_plus: 0,
            b_plus: 0,
        });
        t.n += 1;
        if e.a == e.b {
            t.coincidences += 1;
        } else {
            t.anticoincidences += 1;
        }
        t.a_plus += u64::from(e.a == Outcome::Plus);
        t.b_plus += u64::from(e.b == Outcome::Plus);
    }
    groups.into_values().collect()
}

/// Monotone map from finite f64 to u64 (total order of the bit patterns).
fn order_key(x: f64) -> u64 {
    let bits = x.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

pub const EVENTS_HEADER: &str = "pair_tag,station,setting_rad,outcome";
pub const MATCHED_HEADER: &str = "pair_tag,theta1_rad,theta2_rad,a,b";

pub fn write_station_events_csv<W: Write>(mut w: W, streams: &[&[StationEvent]]) -> Result<()> {
    writeln!(w, "{EVENTS_HEADER}")?;
    for stream in streams {
        for e in stream.iter() {
            writeln!(w, "{},{},{},{}", e.pair_tag, e.station, fmt_f64(e.setting.theta()), e.outcome)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_matched_csv<W: Write>(mut w: W, matched: &[PairEvent]) -> Result<()> {
    writeln!(w, "{MATCHED_HEADER}")?;
    for e in matched {
        writeln!(w, "{},{},{},{},{}", e.pair_tag, fmt_f64(e.theta1), fmt_f64(e.theta2), e.a, e.b)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, what: &str, line_no: usize) -> Result<T> {
    field
        .and_then(|f| f.trim().parse().ok())
        .ok_or_else(|| QcorrError::Integrity(format!("line {line_no}: bad or missing {what}")))
}

/// Reads an events CSV back into per-station streams.
pub fn read_station_events_csv<R: BufRead>(r: R) -> Result<(Vec<StationEvent>, Vec<StationEvent>)> {
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim_end() == EVENTS_HEADER => {}
        _ => return Err(QcorrError::Integrity(format!("expected header `{EVENTS_HEADER}`"))),
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 2;
        let mut f = line.split(',');
        let pair_tag: u64 = parse_field(f.next(), "pair_tag", line_no)?;
        let station = match f.next().map(str::trim) {
            Some("A") => Station::A,
            Some("B") => Station::B,
            _ => return Err(QcorrError::Integrity(format!("line {line_no}: bad station"))),
        };
        let theta: f64 = parse_field(f.next(), "setting_rad", line_no)?;
        let outcome: i64 = parse_field(f.next(), "outcome", line_no)?;
        let event = StationEvent {
            station,
            pair_tag,
            setting: AnalyzerSetting::new(theta)?,
            outcome: Outcome::from_value(outcome)?,
        };
        match station {
            Station::A => a.push(event),
            Station::B => b.push(event),
        }
    }
    Ok((a, b))
}
