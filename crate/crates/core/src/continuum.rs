//! Position-momentum entangled pairs through double slits.
//!
//! A detector at coordinate `x` applies the local amplitude
//! `(1/√2)·exp(i·α·k·(x − x₀)/2)`; the halved phase is the spin-½ mapping.
//! The two-detector correlation is `cos(αk(x₁ − x₂)/2)` and its square is the
//! coincidence fringe `½(1 + cos αk(x₁ − x₂))`, while each detector alone sees
//! a flat `½`.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::amplitude::ComplexAmplitude;
use crate::analysis::visibility_analytic;
use crate::error::{domain, ensure_finite, Result};
use crate::output::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitGeometry {
    /// Wave number, radians per length unit.
    pub k: f64,
    /// Angular scaling factor of the slit arrangement.
    pub alpha: f64,
    /// Reference coordinate.
    pub x0: f64,
}

impl SlitGeometry {
    pub fn new(k: f64, alpha: f64, x0: f64) -> Result<Self> {
        ensure_finite("x0", x0)?;
        for (name, v) in [("k", k), ("alpha", alpha)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(SlitGeometry { k, alpha, x0 })
    }

    /// Fringe spatial frequency `αk`.
    pub fn fringe_wavenumber(&self) -> f64 {
        self.alpha * self.k
    }

    /// `2π/(αk)`.
    pub fn nominal_period(&self) -> f64 {
        TAU / self.fringe_wavenumber()
    }
}

impl Default for SlitGeometry {
    fn default() -> Self {
        SlitGeometry { k: 1.0, alpha: 1.0, x0: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DetectorPos(f64);

impl DetectorPos {
    pub fn new(x: f64) -> Result<Self> {
        ensure_finite("detector coordinate", x).map(DetectorPos)
    }

    pub const fn x(self) -> f64 {
        self.0
    }
}

pub fn slit_amplitude(x: DetectorPos, geom: &SlitGeometry) -> ComplexAmplitude {
    ComplexAmplitude::from_polar(FRAC_1_SQRT_2, geom.fringe_wavenumber() * (x.x() - geom.x0) / 2.0)
}

/// `U(x₁, x₂) = cos(αk(x₁ − x₂)/2)`.
pub fn twoslit_correlation(x1: DetectorPos, x2: DetectorPos, geom: &SlitGeometry) -> f64 {
    (geom.fringe_wavenumber() * (x1.x() - x2.x()) / 2.0).cos()
}

/// Coincidence probability `U²`.
pub fn coincidence_pattern(x1: DetectorPos, x2: DetectorPos, geom: &SlitGeometry) -> f64 {
    let u = twoslit_correlation(x1, x2, geom);
    u * u
}

/// Single-detector detection probability: flat, no fringes.
pub fn single_marginal(_x: DetectorPos, _geom: &SlitGeometry) -> f64 {
    0.5
}

/// Visibility of the coincidence fringe from its closed form
/// `½ + ½·cos(αk·Δx)`.
pub fn fringe_visibility(_geom: &SlitGeometry) -> f64 {
    visibility_analytic(0.5, 0.5).expect("closed-form fringe is nonnegative")
}

fn fringe_offset(dx: f64, geom: &SlitGeometry) -> f64 {
    coincidence_pattern(DetectorPos(dx), DetectorPos(0.0), geom) - 0.5
}

fn bisect(geom: &SlitGeometry, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = fringe_offset(lo, geom);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = fringe_offset(mid, geom);
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Period of the coincidence fringe in `x₁ − x₂`, measured as the distance
/// between the first and third crossings of the half-height line.
pub fn pattern_period(geom: &SlitGeometry) -> f64 {
    // Bracketing step: 256 samples per nominal period.
    let h = geom.nominal_period() / 256.0;
    let mut crossings = Vec::with_capacity(3);
    let mut x = 0.0;
    let mut f = fringe_offset(x, geom);
    while crossings.len() < 3 {
        let next = x + h;
        let f_next = fringe_offset(next, geom);
        if (f > 0.0) != (f_next > 0.0) {
            crossings.push(bisect(geom, x, next));
        }
        x = next;
        f = f_next;
    }
    crossings[2] - crossings[0]
}

pub const PATTERN_HEADER: &str = "dx,pattern";

/// Samples the coincidence fringe at `x₁ = x₀ + dx`, `x₂ = x₀`.
pub fn sample_pattern(geom: &SlitGeometry, dx: &[f64]) -> Result<Vec<(f64, f64)>> {
    dx.iter()
        .map(|&d| {
            let x1 = DetectorPos::new(geom.x0 + d)?;
            let x2 = DetectorPos::new(geom.x0)?;
            Ok((d, coincidence_pattern(x1, x2, geom)))
        })
        .collect()
}

pub fn write_pattern_csv<W: Write>(mut w: W, samples: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "{PATTERN_HEADER}")?;
    for &(d, p) in samples {
        writeln!(w, "{},{}", fmt_f64(d), fmt_f64(p))?;
    }
    w.flush()?;
    Ok(())
}
