//! Acceptance suite, run without the test harness so that every criterion's
//! line is printed. Exits nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Duration;

use qcorr::config::ExperimentConfig;
use qcorr::selftest::{
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, CriterionFn,
};

/// Criteria with a wall-clock budget.
fn time_limit(id: u8) -> Option<Duration> {
    match id {
        1 | 2 => Some(Duration::from_secs(1)),
        5 => Some(Duration::from_secs(10)),
        _ => None,
    }
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for name in ["run1", "run2"] {
        let out = Command::new(env!("CARGO_BIN_EXE_qcorr"))
            .args(["selftest", "--out", name])
            .current_dir(dir.path())
            .output()
            .expect("spawn qcorr");
        if !out.status.success() {
            return (false, format!("selftest exited with {:?}", out.status.code()));
        }
        runs.push(read_dir_bytes(&dir.path().join(name)));
    }
    let n = runs[0].len();
    if n > 0 && runs[0] == runs[1] {
        (true, format!("{n} artifacts byte-identical across two selftest runs"))
    } else {
        (false, "selftest artifacts differ between runs".into())
    }
}

fn main() -> ExitCode {
    let config = ExperimentConfig::default();
    let criteria: [CriterionFn; 8] =
        [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8];
    let mut failures = Vec::new();
    for f in criteria {
        let (r, _) = f(&config).expect("criterion ran");
        let mut passed = r.passed;
        let mut line = r.line();
        if let Some(limit) = time_limit(r.id) {
            let within = r.elapsed <= limit;
            passed &= within;
            line = format!("{line}; {:.3} s (limit {} s)", r.elapsed.as_secs_f64(), limit.as_secs());
            if !within {
                line = line.replacen("[PASS]", "[FAIL]", 1);
            }
        }
        println!("{line}");
        if !passed {
            failures.push(r.id);
        }
    }
    let (passed, detail) = determinism();
    println!("[{}] 9. determinism: {detail}", if passed { "PASS" } else { "FAIL" });
    if !passed {
        failures.push(9);
    }
    if failures.is_empty() {
        println!("acceptance: 9/9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failures:?}");
        ExitCode::FAILURE
    }
}
