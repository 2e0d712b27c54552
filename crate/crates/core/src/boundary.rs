//! Boundary derivatives of solved maps, two ways, with the symmetry and
//! quasisymmetry functionals of circle maps.
//!
//! `|f′(ζ)|` is the modulus of the tangential derivative `d f(e^{iθ}) / d(e^{iθ})`.
//! The module route rearranges the identity, valid where F is conformal at ζ,
//! `ln|f′(ζ)| = m(F(D(ζ,r)), f(ζ)) − lim_{ρ→0} [Mod(F(A_{ζ,ρ,r})) + ln ρ]`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle_map::CircleMap;
use crate::error::{arg, QcError, Result};
use crate::field::twb_integral;
use crate::geometry::Point;
use crate::modules::ModuleResolution;
use crate::reduced::{image_disc_boundary, module_defect_with, reduced_module, ModuleDefect};
use crate::solver::QcSolution;

/// Ratios with a smaller denominator are reported as degenerate.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeMethod {
    FiniteDifference,
    Claim3Modules,
}

impl std::fmt::Display for DerivativeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::FiniteDifference => "finite-difference",
            Self::Claim3Modules => "claim3-modules",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeEstimate {
    pub zeta: Point,
    pub magnitude: f64,
    pub method: DerivativeMethod,
    pub tolerance: f64,
}

fn chord_quotient(map: &CircleMap, theta: f64, h: f64) -> f64 {
    let num = (map.eval(theta + h) - map.eval(theta - h)).norm();
    // |e^{i(θ+h)} − e^{i(θ−h)}| = 2 sin h
    num / (2.0 * h.sin())
}

/// Central chord quotient at `ζ = e^{iθ}`, with `|est(h) − est(h/2)|` as tolerance.
pub fn derivative_fd(map: &CircleMap, theta: f64, h: f64) -> Result<DerivativeEstimate> {
    if !(h > 0.0 && h < PI / 8.0) {
        return Err(arg(format!("step must lie in (0, π/8), got {h}")));
    }
    if h < map.spacing() {
        return Err(QcError::Resolution(format!(
            "step {h:.3e} is below the sample spacing {:.3e} of the circle map",
            map.spacing()
        )));
    }
    let est = chord_quotient(map, theta, h);
    let half = chord_quotient(map, theta, 0.5 * h);
    if !(est > 0.0 && est.is_finite()) {
        return Err(QcError::Degenerate(format!("chord quotient {est} at θ = {theta}")));
    }
    Ok(DerivativeEstimate {
        zeta: Point::from_polar(1.0, theta),
        magnitude: est,
        method: DerivativeMethod::FiniteDifference,
        tolerance: (est - half).abs(),
    })
}

/// `|f′(ζ)|` from the reduced module of the image disc and the module defect.
/// Refuses points where the TWB integral is not known to be finite.
pub fn derivative_via_modules(solution: &QcSolution, zeta: Point, r: f64, rhos: &[f64]) -> Result<DerivativeEstimate> {
    derivative_via_modules_with(solution, zeta, r, rhos, &ModuleResolution::default()).map(|(d, _)| d)
}

pub fn derivative_via_modules_with(
    solution: &QcSolution,
    zeta: Point,
    r: f64,
    rhos: &[f64],
    res: &ModuleResolution,
) -> Result<(DerivativeEstimate, ModuleDefect)> {
    let field = solution.field();
    let twb = twb_integral(field, zeta, r)?;
    if !twb.is_finite() {
        return Err(QcError::Precondition(format!(
            "TWB integral of {field} at {zeta} is {:?} (partial sum {:.4}); the module limit need not exist",
            twb.status,
            twb.partial_sum()
        )));
    }
    let defect = module_defect_with(field, zeta, r, rhos, res)?;
    let curve = image_disc_boundary(solution, zeta, r)?;
    let m = reduced_module(&curve, solution.eval(zeta)?)?;
    let ln_mag = m.value - defect.limit;
    let magnitude = ln_mag.exp();
    Ok((
        DerivativeEstimate {
            zeta,
            magnitude,
            method: DerivativeMethod::Claim3Modules,
            // first-order propagation through exp
            tolerance: magnitude * (m.tolerance + defect.tolerance),
        },
        defect,
    ))
}

/// `m(ρ) = min` and `M(ρ) = max` of `|F(z) − f(ζ)|` on `|z − ζ| = ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingExtremes {
    pub rho: f64,
    pub min: f64,
    pub max: f64,
}

pub const RING_SAMPLES: usize = 256;

pub fn ring_extremes(solution: &QcSolution, zeta: Point, rho: f64) -> Result<RingExtremes> {
    let floor = solution.resolution_floor();
    if !(rho >= floor) {
        return Err(QcError::Resolution(format!(
            "ring radius {rho:.3e} is below four grid cells ({floor:.3e})"
        )));
    }
    let center = solution.eval(zeta)?;
    let (mut min, mut max) = (f64::INFINITY, 0.0f64);
    for k in 0..RING_SAMPLES {
        let z = zeta + Point::from_polar(rho, 2.0 * PI * k as f64 / RING_SAMPLES as f64);
        let d = (solution.eval(z)? - center).norm();
        min = min.min(d);
        max = max.max(d);
    }
    if !(min > 0.0) {
        return Err(QcError::Degenerate(format!("image ring touches f(ζ) at ρ = {rho}")));
    }
    Ok(RingExtremes { rho, min, max })
}

/// `|f(e^{i(θ+t)}) − f(e^{iθ})| / |f(e^{iθ}) − f(e^{i(θ−t)})|`.
pub fn symmetry_ratio(map: &CircleMap, theta: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < PI / 2.0) {
        return Err(arg(format!("step must lie in (0, π/2), got {t}")));
    }
    let mid = map.eval(theta);
    let num = (map.eval(theta + t) - mid).norm();
    let den = (mid - map.eval(theta - t)).norm();
    if den < DEGENERATE_DENOMINATOR || num < DEGENERATE_DENOMINATOR {
        return Err(QcError::Degenerate(format!("three-point ratio at θ = {theta}, t = {t}: {num:e} / {den:e}")));
    }
    Ok(num / den)
}

/// Angles at which the sup-type functionals are sampled; θ = 0 is included.
pub const SYMMETRY_THETAS: usize = 512;

/// `sup_θ |ratio(θ, t) − 1|` over [`SYMMETRY_THETAS`] equispaced angles.
pub fn symmetry_deviation(map: &CircleMap, t: f64) -> Result<f64> {
    let devs: Vec<Result<f64>> = (0..SYMMETRY_THETAS)
        .into_par_iter()
        .map(|k| Ok((symmetry_ratio(map, 2.0 * PI * k as f64 / SYMMETRY_THETAS as f64, t)? - 1.0).abs()))
        .collect();
    devs.into_iter().try_fold(0.0, |acc, d| Ok(f64::max(acc, d?)))
}

/// Sampled lower bound for the quasisymmetry constant: the largest
/// `max(ratio, 1/ratio)` over the `t` grid and [`SYMMETRY_THETAS`] angles.
pub fn quasisymmetry_constant(map: &CircleMap, ts: &[f64]) -> Result<f64> {
    if ts.is_empty() {
        return Err(arg("t grid must be nonempty"));
    }
    let mut best = 1.0f64;
    for &t in ts {
        for k in 0..SYMMETRY_THETAS {
            let q = symmetry_ratio(map, 2.0 * PI * k as f64 / SYMMETRY_THETAS as f64, t)?;
            best = best.max(q).max(1.0 / q);
        }
    }
    Ok(best)
}

/// Settings for the module route of a ζ sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    /// Radius `r` of the disc `D(ζ, r)`.
    pub r: f64,
    /// Largest inner radius as a fraction of `r`; further radii halve it.
    pub first_rho_fraction: f64,
    pub n_rho: usize,
    pub resolution: ModuleResolution,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            r: 0.25,
            first_rho_fraction: 0.25,
            n_rho: 3,
            resolution: ModuleResolution {
                radial_per_log: 32.0,
                min_radial: 24,
                n_angular: 128,
            },
        }
    }
}

impl SweepSettings {
    pub fn rhos(&self) -> Vec<f64> {
        (0..self.n_rho)
            .map(|j| self.r * self.first_rho_fraction * 0.5f64.powi(j as i32))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationSample {
    pub theta: f64,
    /// `ln|f′(e^{iθ})|`; `None` when the estimator failed at this point.
    pub ln_derivative: Option<f64>,
    pub method: DerivativeMethod,
    pub tolerance: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationSweep {
    pub samples: Vec<OscillationSample>,
    /// Largest difference of `ln|f′|` between cyclically adjacent successful samples.
    pub max_oscillation: f64,
    pub failures: usize,
}

impl OscillationSweep {
    fn from_samples(samples: Vec<OscillationSample>) -> Self {
        let ok: Vec<f64> = samples.iter().filter_map(|s| s.ln_derivative).collect();
        let n = ok.len();
        let max_oscillation = if n < 2 {
            0.0
        } else {
            (0..n).map(|k| (ok[(k + 1) % n] - ok[k]).abs()).fold(0.0, f64::max)
        };
        let failures = samples.len() - n;
        Self {
            samples,
            max_oscillation,
            failures,
        }
    }

    /// `ln|f′|` difference between the two samples bracketing `theta`.
    pub fn jump_across(&self, theta: f64) -> Option<f64> {
        let n = self.samples.len();
        let t = theta.rem_euclid(2.0 * PI);
        let after = self.samples.iter().position(|s| s.theta > t).unwrap_or(0);
        let before = (after + n - 1) % n;
        Some((self.samples[after].ln_derivative? - self.samples[before].ln_derivative?).abs())
    }

    /// CSV `theta,ln_abs_derivative,method,tolerance`; failed points carry
    /// `NaN` and the method `failed`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,ln_abs_derivative,method,tolerance\n");
        for s in &self.samples {
            match s.ln_derivative {
                Some(v) => out.push_str(&format!("{:.17e},{:.17e},{},{:.6e}\n", s.theta, v, s.method, s.tolerance)),
                None => out.push_str(&format!("{:.17e},NaN,failed,NaN\n", s.theta)),
            }
        }
        out
    }
}

fn sweep_angles(n_zeta: usize) -> Result<Vec<f64>> {
    if n_zeta < 16 {
        return Err(arg(format!("a derivative sweep needs at least 16 points, got {n_zeta}")));
    }
    // offset by half a step so that no sample sits on θ = 0
    Ok((0..n_zeta).map(|k| 2.0 * PI * (k as f64 + 0.5) / n_zeta as f64).collect())
}

/// `ln|f′|` at `n_zeta` equispaced points by the module route.
pub fn derivative_oscillation(solution: &QcSolution, n_zeta: usize, settings: &SweepSettings) -> Result<OscillationSweep> {
    let angles = sweep_angles(n_zeta)?;
    let rhos = settings.rhos();
    let samples = angles
        .par_iter()
        .map(|&theta| {
            let zeta = Point::from_polar(1.0, theta);
            match derivative_via_modules_with(solution, zeta, settings.r, &rhos, &settings.resolution) {
                Ok((d, _)) => OscillationSample {
                    theta,
                    ln_derivative: Some(d.magnitude.ln()),
                    method: d.method,
                    tolerance: d.tolerance / d.magnitude,
                    error: None,
                },
                Err(e) => OscillationSample {
                    theta,
                    ln_derivative: None,
                    method: DerivativeMethod::Claim3Modules,
                    tolerance: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(OscillationSweep::from_samples(samples))
}

/// Finite-difference sweep with step a quarter of the ζ spacing, for traces
/// whose coefficient is outside the module route's scope.
pub fn derivative_oscillation_fd(map: &CircleMap, n_zeta: usize) -> Result<OscillationSweep> {
    let angles = sweep_angles(n_zeta)?;
    let h = 0.25 * 2.0 * PI / n_zeta as f64;
    let samples = angles
        .iter()
        .map(|&theta| match derivative_fd(map, theta, h) {
            Ok(d) => OscillationSample {
                theta,
                ln_derivative: Some(d.magnitude.ln()),
                method: d.method,
                tolerance: d.tolerance / d.magnitude,
                error: None,
            },
            Err(e) => OscillationSample {
                theta,
                ln_derivative: None,
                method: DerivativeMethod::FiniteDifference,
                tolerance: f64::NAN,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(OscillationSweep::from_samples(samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_derivative_is_one() {
        let id = CircleMap::identity(256).unwrap();
        for theta in [0.0, 1.0, 2.5, 5.0] {
            let d = derivative_fd(&id, theta, 0.05).unwrap();
            assert!((d.magnitude - 1.0).abs() < 1e-8, "{d:?}");
        }
    }

    #[test]
    fn angular_stretch_interior_slope() {
        let map = CircleMap::angular_stretch(1.5, 1024).unwrap();
        let d = derivative_fd(&map, PI / 2.0, 0.02).unwrap();
        // sin(a h) / sin h
        let exact = (1.5f64 * 0.02).sin() / 0.02f64.sin();
        assert!((d.magnitude - exact).abs() < 1e-12);
        assert!((d.magnitude - 1.5).abs() < 1e-3);
    }

    #[test]
    fn step_validation() {
        let id = CircleMap::identity(64).unwrap();
        assert!(matches!(derivative_fd(&id, 0.0, 0.5), Err(QcError::Argument(_))));
        assert!(matches!(derivative_fd(&id, 0.0, 0.01), Err(QcError::Resolution(_))));
        assert!(symmetry_ratio(&id, 0.0, 2.0).is_err());
    }

    #[test]
    fn symmetry_of_identity_and_angular_stretch() {
        let id = CircleMap::identity(256).unwrap();
        assert!((symmetry_ratio(&id, 0.3, 0.1).unwrap() - 1.0).abs() < 1e-8);
        assert!((quasisymmetry_constant(&id, &[0.1, 0.05]).unwrap() - 1.0).abs() < 1e-7);
        let map = CircleMap::angular_stretch(1.5, 1024).unwrap();
        let q = symmetry_ratio(&map, 0.0, 0.0125).unwrap();
        assert!((q - 3.0).abs() < 0.05 * 3.0, "{q}");
        let m = quasisymmetry_constant(&map, &[0.1, 0.05, 0.0125]).unwrap();
        assert!(m <= 3.0 + 1e-9 && m > 2.9, "{m}");
    }

    #[test]
    fn angular_stretch_jump_survives_refinement() {
        let map = CircleMap::angular_stretch(1.5, 4096).unwrap();
        for n in [32, 64, 128] {
            let sweep = derivative_oscillation_fd(&map, n).unwrap();
            let jump = sweep.jump_across(0.0).unwrap();
            assert!((jump - 3f64.ln()).abs() <= 0.1 * 3f64.ln(), "n = {n}: jump {jump}");
            assert_eq!(sweep.failures, 0);
        }
    }

    #[test]
    fn sweep_csv_shape() {
        let sweep = derivative_oscillation_fd(&CircleMap::identity(512).unwrap(), 16).unwrap();
        let csv = sweep.to_csv();
        assert_eq!(csv.lines().count(), 17);
        assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 4));
        assert!(sweep.max_oscillation < 1e-12);
        assert!(derivative_oscillation_fd(&CircleMap::identity(512).unwrap(), 8).is_err());
    }

    #[test]
    fn sweep_rhos_are_dyadic() {
        let s = SweepSettings::default();
        let r = s.rhos();
        assert_eq!(r.len(), 3);
        assert!((r[0] / r[1] - 2.0).abs() < 1e-12 && (r[1] / r[2] - 2.0).abs() < 1e-12);
    }
}
