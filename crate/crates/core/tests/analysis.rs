use std::f64::consts::{PI, SQRT_2, TAU};

use qcorr::amplitude::{PairSpec, SpinKind};
use qcorr::analysis::{
    chsh_analytic, chsh_from_values, chsh_lhv, chsh_monte_carlo, scan_settings, uniform_grid, visibility, ChshSettings,
    ScanReport,
};
use qcorr::continuum::{
    coincidence_pattern, pattern_period, sample_pattern, single_marginal, DetectorPos, SlitGeometry,
};
use qcorr::selftest::quadrature_marginal;

#[test]
fn chsh_analytic_reaches_tsirelson_bound() {
    for species in [SpinKind::Photon, SpinKind::Half] {
        let r = chsh_analytic(&PairSpec::canonical(species), &ChshSettings::canonical(species)).unwrap();
        assert!((r.s - 2.0 * SQRT_2).abs() <= 1e-9, "{species}: {}", r.s);
        assert!(r.bound_violated);
        assert!(r.s_std_error.is_none());
    }
}

#[test]
fn chsh_of_fixed_values() {
    assert_eq!(chsh_from_values([1.0, -1.0, 1.0, 1.0]), 4.0);
    assert_eq!(chsh_from_values([0.5, 0.5, 0.5, 0.5]), 1.0);
}

#[test]
fn chsh_sampled_estimates() {
    let settings = ChshSettings::canonical(SpinKind::Photon);
    let mc = chsh_monte_carlo(&PairSpec::photon_orthogonal(), &settings, 200_000, 8).unwrap();
    let err = mc.s_std_error.unwrap();
    assert!((mc.s - 2.0 * SQRT_2).abs() <= 5.0 * err, "{} ± {err}", mc.s);
    let lhv = chsh_lhv(&settings, 200_000, 8).unwrap();
    assert!(lhv.s <= 2.0 + 5.0 * lhv.s_std_error.unwrap(), "{}", lhv.s);
    assert!(chsh_monte_carlo(&PairSpec::singlet(), &settings, 0, 1).is_err());
}

#[test]
fn scan_csv_round_trip() {
    let spec = PairSpec::singlet();
    let mut r = scan_settings(&spec, &uniform_grid(0.0, PI, 11)).unwrap();
    r.add_monte_carlo(2000, 4).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let back = ScanReport::read_csv(buf.as_slice(), spec).unwrap();
    assert_eq!(back, r);
    assert!(r.points.iter().all(|p| p.mc_p.is_some()));
    assert!(scan_settings(&spec, &[]).is_err());
}

#[test]
fn grids() {
    assert_eq!(uniform_grid(0.0, 1.0, 0), Vec::<f64>::new());
    assert_eq!(uniform_grid(2.0, 5.0, 1), vec![2.0]);
    let g = uniform_grid(0.0, PI, 1001);
    assert_eq!((g[0], g[1000], g.len()), (0.0, PI, 1001));
}

#[test]
fn visibility_of_samples() {
    assert_eq!(visibility(&[1.0, 0.0, 0.5]).unwrap(), 1.0);
    assert!((visibility(&[0.75, 0.25]).unwrap() - 0.5).abs() < 1e-15);
    assert!(visibility(&[]).is_err());
    assert!(visibility(&[0.0, 0.0]).is_err());
    assert!(visibility(&[-0.1, 1.0]).is_err());
}

#[test]
fn double_slit_marginal_by_quadrature() {
    for g in [
        SlitGeometry::default(),
        SlitGeometry::new(4.0, 0.25, -3.0).unwrap(),
        SlitGeometry::new(50.0, 0.01, 1.0).unwrap(),
    ] {
        for x1 in [-2.0, 0.0, 0.3, 10.0] {
            let m = quadrature_marginal(x1, &g, 128).unwrap();
            assert!((m - 0.5).abs() <= 1e-9, "{g:?} x1={x1}: {m}");
            assert_eq!(single_marginal(DetectorPos::new(x1).unwrap(), &g), 0.5);
        }
    }
}

#[test]
fn double_slit_pattern() {
    let g = SlitGeometry::new(2.0, 0.75, 0.5).unwrap();
    let period = g.nominal_period();
    assert!((period - TAU / 1.5).abs() < 1e-15);
    assert!((pattern_period(&g) - period).abs() <= 1e-9);
    let samples = sample_pattern(&g, &uniform_grid(0.0, period, 201)).unwrap();
    assert_eq!(samples[0].1, 1.0);
    assert!(samples[100].1 < 1e-20);
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    assert!((visibility(&values).unwrap() - 1.0).abs() <= 1e-12);
    let x = |v| DetectorPos::new(v).unwrap();
    assert_eq!(coincidence_pattern(x(3.3), x(3.3), &g), 1.0);
    assert!((coincidence_pattern(x(1.0), x(0.2), &g) - coincidence_pattern(x(5.0), x(4.2), &g)).abs() < 1e-12);
}
