//! C ABI for `qcorr`.
//!
//! Every fallible function returns a [`QcorrStatus`] and writes results
//! through caller-provided pointers. On failure a description is available
//! from [`qcorr_last_error`] on the same thread. Monte Carlo runs live behind
//! the opaque [`QcorrRun`] handle, which the caller releases with
//! [`qcorr_run_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qcorr::amplitude::{correlation_u, joint_distribution, AnalyzerSetting, JointDistribution, PairSpec, SpinKind};
use qcorr::analysis::{chsh_analytic, ChshSettings};
use qcorr::events::{
    coincidence_match, simulate, station_streams, tally_by_setting, RunConfig, ScheduleMode, ScheduledSetting,
    SettingTally,
};
use qcorr::oracle::{bell_state, hardy_search, joint_probs_qm, BellKind, HardySearch};
use qcorr::QcorrError;

pub const QCORR_SPECIES_PHOTON: u32 = 0;
pub const QCORR_SPECIES_HALF: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcorrStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Integrity = 3,
    Config = 4,
    Numerical = 5,
    Io = 6,
    /// The Hardy search found no admissible configuration.
    NoSolution = 7,
    /// The run has not been executed yet, or has no such setting.
    InvalidState = 8,
    Panic = 9,
}

/// Joint outcome probabilities, `p_pm` = P(A = +1, B = −1).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QcorrJoint {
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl From<JointDistribution> for QcorrJoint {
    fn from(d: JointDistribution) -> Self {
        QcorrJoint { p_pp: d.p_pp, p_pm: d.p_pm, p_mp: d.p_mp, p_mm: d.p_mm }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QcorrHardy {
    /// State `cos γ|HH⟩ + sin γ|VV⟩`.
    pub gamma: f64,
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
    pub p_star: f64,
    /// Largest of the three constrained probabilities.
    pub max_zero: f64,
}

/// Opaque Monte Carlo run.
pub struct QcorrRun {
    seed: u64,
    n_pairs: u64,
    spec: PairSpec,
    schedule: Vec<ScheduledSetting>,
    mode: ScheduleMode,
    matched: u64,
    tallies: Option<Vec<SettingTally>>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &QcorrError) -> QcorrStatus {
    match err {
        QcorrError::Domain(_) => QcorrStatus::Domain,
        QcorrError::Integrity(_) => QcorrStatus::Integrity,
        QcorrError::Config(_) => QcorrStatus::Config,
        QcorrError::Numerical(_) => QcorrStatus::Numerical,
        QcorrError::Io(_) => QcorrStatus::Io,
    }
}

enum Failure {
    Lib(QcorrError),
    Status(QcorrStatus, String),
}

impl From<QcorrError> for Failure {
    fn from(e: QcorrError) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QcorrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QcorrStatus::Ok
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            QcorrStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure::Status(QcorrStatus::NullPointer, "null pointer argument".into())
}

fn species(code: u32) -> Result<SpinKind, Failure> {
    match code {
        QCORR_SPECIES_PHOTON => Ok(SpinKind::Photon),
        QCORR_SPECIES_HALF => Ok(SpinKind::Half),
        other => Err(Failure::Status(QcorrStatus::Domain, format!("unknown species code {other}"))),
    }
}

/// Writes `value` through `out`.
///
/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `qcorr_*` call on the same thread.
#[no_mangle]
pub extern "C" fn qcorr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qcorr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `U = cos(s(θ₁ − θ₂) + s·φ₀)`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn qcorr_correlation_u(
    species_code: u32,
    phi0: f64,
    theta1: f64,
    theta2: f64,
    out: *mut f64,
) -> QcorrStatus {
    guard(|| {
        let spec = PairSpec::new(species(species_code)?, phi0)?;
        let u = correlation_u(AnalyzerSetting::new(theta1)?, AnalyzerSetting::new(theta2)?, &spec);
        put(out, u)
    })
}

/// Joint outcome distribution of the amplitude model.
///
/// # Safety
/// `out` must be null or point to a writable `QcorrJoint`.
#[no_mangle]
pub unsafe extern "C" fn qcorr_joint_distribution(
    species_code: u32,
    phi0: f64,
    theta1: f64,
    theta2: f64,
    out: *mut QcorrJoint,
) -> QcorrStatus {
    guard(|| {
        let spec = PairSpec::new(species(species_code)?, phi0)?;
        put(out, joint_distribution(AnalyzerSetting::new(theta1)?, AnalyzerSetting::new(theta2)?, &spec).into())
    })
}

/// Born-rule joint distribution in the species' reference Bell state.
///
/// # Safety
/// `out` must be null or point to a writable `QcorrJoint`.
#[no_mangle]
pub unsafe extern "C" fn qcorr_joint_probs_qm(
    species_code: u32,
    theta1: f64,
    theta2: f64,
    out: *mut QcorrJoint,
) -> QcorrStatus {
    guard(|| {
        let s = species(species_code)?;
        put(out, joint_probs_qm(&bell_state(BellKind::for_species(s)), s, theta1, theta2)?.into())
    })
}

/// Analytic CHSH statistic of the amplitude model at the canonical pair
/// phase of the species.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn qcorr_chsh_analytic(
    species_code: u32,
    a: f64,
    a_prime: f64,
    b: f64,
    b_prime: f64,
    out: *mut f64,
) -> QcorrStatus {
    guard(|| {
        let spec = PairSpec::canonical(species(species_code)?);
        put(out, chsh_analytic(&spec, &ChshSettings::new(a, a_prime, b, b_prime)?)?.s)
    })
}

/// Creates an empty run. Add settings, then execute.
///
/// # Safety
/// `out` must be null or point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn qcorr_run_new(
    seed: u64,
    n_pairs: u64,
    species_code: u32,
    phi0: f64,
    out: *mut *mut QcorrRun,
) -> QcorrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let spec = PairSpec::new(species(species_code)?, phi0)?;
        let run = QcorrRun {
            seed,
            n_pairs,
            spec,
            schedule: Vec::new(),
            mode: ScheduleMode::Cyclic,
            matched: 0,
            tallies: None,
        };
        put(out, Box::into_raw(Box::new(run)))
    })
}

/// Appends a setting pair with relative `weight`.
///
/// # Safety
/// `run` must be null or a live handle from `qcorr_run_new`.
#[no_mangle]
pub unsafe extern "C" fn qcorr_run_add_setting(
    run: *mut QcorrRun,
    theta1: f64,
    theta2: f64,
    weight: f64,
) -> QcorrStatus {
    guard(|| {
        let run = run.as_mut().ok_or_else(null)?;
        run.schedule.push(ScheduledSetting { weight, ..ScheduledSetting::new(theta1, theta2) });
        run.tallies = None;
        Ok(())
    })
}

/// Nonzero `random` selects a seeded random schedule instead of the cyclic
/// default.
///
/// # Safety
/// `run` must be null or a live handle from `qcorr_run_new`.
#[no_mangle]
pub unsafe extern "C" fn qcorr_run_set_random_schedule(run: *mut QcorrRun, random: i32) -> QcorrStatus {
    guard(|| {
        let run = run.as_mut().ok_or_else(null)?;
        run.mode = if random != 0 { ScheduleMode::Random } else { ScheduleMode::Cyclic };
        run.tallies = None;
        Ok(())
    })
}

/// Simulates the run, splits it into station streams and matches them.
///
/// # Safety
/// `run` must be null or a live handle from `qcorr_run_new`.
#[no_mangle]
pub unsafe extern "C" fn qcorr_run_execute(run: *mut QcorrRun) -> QcorrStatus {
    guard(|| {
        let run = run.as_mut().ok_or_else(null)?;
        let mut config = RunConfig::new(run.seed, run.n_pairs, run.schedule.clone(), run.spec);
        config.schedule_mode = run.mode;
        let events = simulate(&config)?;
        let (a, b) = station_streams(&events);
        let matched = coincidence_match(&a, &b)?.matched;
        run.matched = matched.len() as u64;
        run.tallies = Some(tally_by_setting(&matched));
        Ok(())
    })
}

/// Number of matched pairs from the last execution.
///
/// # Safety
/// `run` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qcorr_run_matched_count(run: *const QcorrRun, out: *mut u64) -> QcorrStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(null)?;
        if run.tallies.is_none() {
            return Err(Failure::Status(QcorrStatus::InvalidState, "run has not been executed".into()));
        }
        put(out, run.matched)
    })
}

/// Estimated correlation for one scheduled setting pair, matched exactly.
///
/// # Safety
/// `run` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn qcorr_run_correlation(
    run: *const QcorrRun,
    theta1: f64,
    theta2: f64,
    out: *mut f64,
) -> QcorrStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(null)?;
        let tallies = run
            .tallies
            .as_ref()
            .ok_or_else(|| Failure::Status(QcorrStatus::InvalidState, "run has not been executed".into()))?;
        let t = tallies
            .iter()
            .find(|t| t.theta1 == theta1 && t.theta2 == theta2)
            .ok_or_else(|| Failure::Status(QcorrStatus::InvalidState, format!("no events at ({theta1}, {theta2})")))?;
        put(out, t.correlation())
    })
}

/// Releases a run. Null is ignored.
///
/// # Safety
/// `run` must be null or a handle from `qcorr_run_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qcorr_run_free(run: *mut QcorrRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Hardy configuration search. Returns `QCORR_STATUS_NO_SOLUTION` when no
/// admissible configuration exists at this density.
///
/// # Safety
/// `out` must be null or point to a writable `QcorrHardy`.
#[no_mangle]
pub unsafe extern "C" fn qcorr_hardy_search(
    grid_density: u32,
    refine_tolerance: f64,
    out: *mut QcorrHardy,
) -> QcorrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        match hardy_search(grid_density as usize, refine_tolerance)? {
            HardySearch::Found(r) => put(
                out,
                QcorrHardy {
                    gamma: r.gamma,
                    a: r.settings.a,
                    a_prime: r.settings.a_prime,
                    b: r.settings.b,
                    b_prime: r.settings.b_prime,
                    p_star: r.p_star,
                    max_zero: r.max_zero(),
                },
            ),
            HardySearch::NoSolution { best_p_star, .. } => Err(Failure::Status(
                QcorrStatus::NoSolution,
                format!("no admissible Hardy configuration (best p* {best_p_star})"),
            )),
        }
    })
}
