use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qcorr::amplitude::PairSpec;
use qcorr::analysis::ScanReport;

fn qcorr(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcorr")).args(args).current_dir(dir).output().expect("spawn qcorr")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "status {:?}\nstderr: {}", out.status, String::from_utf8_lossy(&out.stderr));
}

#[test]
fn scan_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    for (species, file) in [("half", "half.csv"), ("photon", "photon.csv")] {
        ok(&qcorr(&["scan", "--species", species, "--out", file], dir.path()));
        let text = fs::read_to_string(dir.path().join(file)).unwrap();
        assert_eq!(text.lines().count(), 1002);
        let spec = PairSpec::canonical(species.parse().unwrap());
        let r = ScanReport::read_csv(text.as_bytes(), spec).unwrap();
        assert!(r.max_abs_diff() <= 1e-12);
    }
}

#[test]
fn scan_json_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.conf"), "# scan\nspecies = half\ngrid_points = 5\ngrid_max = pi/2\nformat = json\n")
        .unwrap();
    ok(&qcorr(&["scan", "--config", "c.conf", "--out", "s.json", "--set", "grid_points=7"], dir.path()));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 7);
    assert_eq!(v["spec"]["species"], "half");
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.conf"), "grid_points = 0\n").unwrap();
    fs::write(dir.path().join("unknown.conf"), "colour = blue\n").unwrap();
    for args in [
        &["scan", "--config", "empty.conf"][..],
        &["scan", "--config", "unknown.conf"],
        &["scan", "--species", "boson"],
        &["scan", "--format", "xml"],
        &["scan", "--phi0", "nan"],
        &["events", "--format", "json"],
        &["hardy", "--format", "csv"],
        &["twoslit", "--set", "k=-1"],
        &["chsh", "--n-pairs", "0"],
        &["frobnicate"],
    ] {
        let out = qcorr(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let out = qcorr(&["scan", "--out", "blocker/scan.csv"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let out = qcorr(&["scan", "--config", "missing.conf"], dir.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn bad_thread_setting_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qcorr"))
        .args(["twoslit"])
        .env("QCORR_THREADS", "many")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn events_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["events", "--seed", "17", "--n-pairs", "20000", "--set", "settings=0:0, 0:pi/8", "--out", out]
    };
    ok(&qcorr(&args("r1"), dir.path()));
    let out = Command::new(env!("CARGO_BIN_EXE_qcorr"))
        .args(args("r2"))
        .env("QCORR_THREADS", "2")
        .current_dir(dir.path())
        .output()
        .unwrap();
    ok(&out);
    for f in ["events.csv", "matched.csv"] {
        let a = fs::read(dir.path().join("r1").join(f)).unwrap();
        let b = fs::read(dir.path().join("r2").join(f)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{f}");
    }
    let matched = fs::read_to_string(dir.path().join("r1/matched.csv")).unwrap();
    assert_eq!(matched.lines().count(), 20001);
    // Parallel photon analyzers: every matched pair anticorrelated.
    for line in matched.lines().skip(1).filter(|l| l.split(',').nth(2) == Some("0") && l.split(',').nth(1) == Some("0"))
    {
        let f: Vec<&str> = line.split(',').collect();
        assert_ne!(f[3], f[4], "{line}");
    }
}

#[test]
fn chsh_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(&qcorr(&["chsh", "--n-pairs", "100000", "--out", "c.json"], dir.path()));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    let s = v["analytic"]["S"].as_f64().unwrap();
    assert!((s - 2.0 * 2f64.sqrt()).abs() <= 1e-9);
    assert!((v["monte_carlo"]["S"].as_f64().unwrap() - s).abs() <= 0.05);
    assert!(v["lhv_baseline"]["S"].as_f64().unwrap() <= 2.05);
    ok(&qcorr(&["chsh", "--n-pairs", "1000", "--format", "csv", "--out", "c.csv"], dir.path()));
    assert_eq!(fs::read_to_string(dir.path().join("c.csv")).unwrap().lines().count(), 4);
}

#[test]
fn twoslit_pattern() {
    let dir = tempfile::tempdir().unwrap();
    ok(&qcorr(&["twoslit", "--set", "dx_min=0", "--set", "dx_max=0", "--set", "dx_points=1"], dir.path()));
    assert_eq!(fs::read_to_string(dir.path().join("twoslit.csv")).unwrap(), "dx,pattern\n0,1\n");
    ok(&qcorr(&["twoslit", "--format", "json", "--out", "t.json"], dir.path()));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(v["visibility"].as_f64(), Some(1.0));
}

#[test]
fn hardy_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(&qcorr(&["hardy", "--set", "fit_starts=8", "--set", "fit_budget=1500"], dir.path()));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("hardy.json")).unwrap()).unwrap();
    assert_eq!(v["coarse"]["status"], "found");
    assert_eq!(v["reproducible"], true);
    assert!(v["maximal_fit"]["residual"].as_f64().unwrap() <= 1e-10);
    assert!(v["hardy_fit"]["residual"].as_f64().unwrap().is_finite());
    for key in ["settings", "targets", "params", "residual", "normalization_defect", "budget", "seed"] {
        assert!(!v["hardy_fit"][key].is_null(), "{key}");
    }
}
