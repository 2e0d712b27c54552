//! Reduced modules `m(Ω, w₀)` of Jordan domains and the module defect of
//! image annuli at boundary points.
//!
//! The primary path computes the Robin constant: `m(Ω, w₀) = h(w₀)` where `h`
//! is harmonic in `Ω` with boundary values `ln|w − w₀|`. It is solved as a
//! double-layer potential with a Nyström discretisation on an arclength
//! resampling of the curve. An independent, much slower oracle evaluates the
//! definition `lim_{ρ→0} Mod(Ω ∖ D(w₀, ρ)) + ln ρ` with a finite-element solve.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::circle_map::PeriodicSpline;
use crate::error::{arg, QcError, Result};
use crate::field::BeltramiField;
use crate::geometry::{AnnulusSpec, JordanCurve, Point};
use crate::modules::{capacity, image_module, DistortionTensor, ModuleResolution, Stiffness};
use crate::quadrature::pairwise_sum;
use crate::solver::QcSolution;

/// Panels of the boundary-integral solve; the tolerance compares against half as many.
pub const ROBIN_PANELS: usize = 256;
/// Samples of `∂D(ζ, r)` pushed through the solution before resampling.
pub const IMAGE_SAMPLES: usize = 512;

/// Turning angles above this between consecutive samples count as a collapse.
const MAX_TURN: f64 = 0.9 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReducedMethod {
    RobinSolve,
    Extrapolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedModuleResult {
    pub value: f64,
    pub method: ReducedMethod,
    pub tolerance: f64,
}

fn check_interior(boundary: &JordanCurve, w0: Point) -> Result<()> {
    if !(w0.re.is_finite() && w0.im.is_finite()) {
        return Err(QcError::Domain("w₀ must be finite".into()));
    }
    let scale = boundary.perimeter();
    let dist = boundary.distance_to(w0);
    if dist <= 1e-9 * scale {
        return Err(QcError::Domain(format!("w₀ = {w0} lies on the boundary")));
    }
    if boundary.winding_number(w0) != 1 {
        return Err(QcError::Domain(format!("w₀ = {w0} lies outside the curve")));
    }
    let pts = boundary.points();
    let n = pts.len();
    for k in 0..n {
        let a = pts[(k + 1) % n] - pts[k];
        let b = pts[(k + 2) % n] - pts[(k + 1) % n];
        let turn = (b / a).arg().abs();
        if turn > MAX_TURN {
            return Err(QcError::Geometry(format!(
                "sample angle collapses at index {}: turning angle {turn:.3} rad",
                (k + 1) % n
            )));
        }
    }
    Ok(())
}

/// `k`-th spectral derivative of periodic samples on `[0, 2π)`.
fn spectral_derivative(values: &[Complex64], order: u32) -> Vec<Complex64> {
    let n = values.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf = values.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let freq = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        if n.is_multiple_of(2) && k == n / 2 && order % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= Complex64::new(0.0, freq).powu(order);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c / n as f64).collect()
}

/// Robin constant on `n` arclength panels.
fn robin_value(boundary: &JordanCurve, w0: Point, n: usize) -> Result<f64> {
    let curve = boundary.resample_arclength(n)?;
    let y = curve.points();
    let dy = spectral_derivative(y, 1);
    let ddy = spectral_derivative(y, 2);
    let dt = 2.0 * PI / n as f64;
    let speed: Vec<f64> = dy.iter().map(|d| d.norm()).collect();
    // outward normal of a positively oriented curve: tangent rotated by −π/2
    let normal: Vec<Point> = dy.iter().zip(&speed).map(|(d, s)| Complex64::new(d.im, -d.re) / *s).collect();
    let curvature: Vec<f64> = (0..n).map(|j| (dy[j].conj() * ddy[j]).im / speed[j].powi(3)).collect();

    let kernel = |x: Point, j: usize| {
        let d = y[j] - x;
        (normal[j].conj() * d).re / d.norm_sqr() / (2.0 * PI) * speed[j] * dt
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let k = if i == j {
                        curvature[j] / (4.0 * PI) * speed[j] * dt
                    } else {
                        kernel(y[i], j)
                    };
                    k + if i == j { 0.5 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let g = DVector::from_iterator(n, y.iter().map(|p| (p - w0).norm().ln()));
    let sigma = a
        .lu()
        .solve(&g)
        .ok_or_else(|| QcError::Geometry("boundary-integral system is singular".into()))?;
    // subtracting the density at the nearest node tames the near-boundary quadrature;
    // the double layer of a constant is that constant inside
    let nearest = (0..n)
        .min_by(|&a, &b| (y[a] - w0).norm().total_cmp(&(y[b] - w0).norm()))
        .unwrap_or(0);
    let s0 = sigma[nearest];
    let terms: Vec<f64> = (0..n).map(|j| (sigma[j] - s0) * kernel(w0, j)).collect();
    Ok(s0 + pairwise_sum(&terms))
}

/// Reduced module `m(Ω, w₀)` of the interior of `boundary`, as the Robin constant.
pub fn reduced_module(boundary: &JordanCurve, w0: Point) -> Result<ReducedModuleResult> {
    check_interior(boundary, w0)?;
    let (fine, coarse) = rayon::join(
        || robin_value(boundary, w0, ROBIN_PANELS),
        || robin_value(boundary, w0, ROBIN_PANELS / 2),
    );
    let (fine, coarse) = (fine?, coarse?);
    if !fine.is_finite() {
        return Err(QcError::Geometry("boundary-integral solve produced a non-finite value".into()));
    }
    Ok(ReducedModuleResult {
        value: fine,
        method: ReducedMethod::RobinSolve,
        tolerance: (fine - coarse).abs() + 1e-12 * fine.abs().max(1.0),
    })
}

/// Resolution of the punctured-domain oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationSettings {
    /// Nodes per unit of log-radius between the puncture and the boundary.
    pub nodes_per_log: usize,
    pub n_angular: usize,
    /// Puncture radii as fractions of `dist(w₀, ∂Ω)`, decreasing by halves.
    pub fractions: [f64; 3],
}

impl Default for ExtrapolationSettings {
    fn default() -> Self {
        Self {
            nodes_per_log: 64,
            n_angular: 256,
            fractions: [0.25, 0.125, 0.0625],
        }
    }
}

/// `ln|w − w₀|` of the boundary as a periodic function of `arg(w − w₀)`.
fn polar_profile(boundary: &JordanCurve, w0: Point) -> Result<PeriodicSpline> {
    let pts = boundary.points();
    let n = pts.len();
    let mut knots = Vec::with_capacity(n + 1);
    let mut phi = (pts[0] - w0).arg();
    knots.push(phi);
    for k in 0..n {
        let step = ((pts[(k + 1) % n] - w0) / (pts[k] - w0)).arg();
        if step <= 0.0 {
            return Err(QcError::Geometry(format!("curve is not star-shaped about {w0} (sample {k})")));
        }
        phi += step;
        knots.push(phi);
    }
    if (phi - knots[0] - 2.0 * PI).abs() > 1e-9 {
        return Err(QcError::Geometry(format!("curve is not star-shaped about {w0}")));
    }
    knots[n] = knots[0] + 2.0 * PI;
    let values: Vec<Complex64> = pts.iter().map(|p| Complex64::new((p - w0).norm().ln(), 0.0)).collect();
    PeriodicSpline::with_knots(&knots, &values, 2.0 * PI)
}

/// `Mod(Ω ∖ D(w₀, ρ))` for star-shaped `Ω`, solved on `(λ, θ) ∈ [0, 1] × [0, 2π)`
/// with `ln|z − w₀| = (1 − λ) ln ρ + λ ℓ(θ)`.
fn punctured_module(profile: &PeriodicSpline, ell_max: f64, rho: f64, n_lambda: usize, n_angular: usize) -> Result<f64> {
    let lambda: Vec<f64> = (0..n_lambda).map(|i| i as f64 / (n_lambda - 1) as f64).collect();
    let ln_rho = rho.ln();
    debug_assert!(ell_max > ln_rho);
    // J = [[L, λℓ′], [0, 1]] from (λ, θ) to (ln r, θ); B = det J · J⁻¹J⁻ᵀ
    let tensor_at = |l: f64, th: f64| {
        let big_l = profile.eval(th).re - ln_rho;
        let dl = profile.derivative(th).re;
        DistortionTensor {
            xx: (1.0 + l * l * dl * dl) / big_l,
            xy: -l * dl,
            yy: big_l,
        }
    };
    let k = Stiffness::assemble_general(&lambda, n_angular, &tensor_at, &|_, _, _, _| None);
    let (energy, iterations, relative_residual) = capacity(&k, &lambda)?;
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(QcError::LinearSolve {
            iterations,
            relative_residual,
        });
    }
    Ok(2.0 * PI / energy)
}

/// Reduced module from its definition: `Mod(Ω ∖ D(w₀, ρ)) + ln ρ` at three
/// puncture radii, extrapolated to `ρ = 0` under `m + c₂ρ² + c₃ρ³`. Needs `Ω`
/// star-shaped about `w₀`.
pub fn reduced_module_extrapolated(boundary: &JordanCurve, w0: Point) -> Result<ReducedModuleResult> {
    reduced_module_extrapolated_with(boundary, w0, &ExtrapolationSettings::default())
}

pub fn reduced_module_extrapolated_with(
    boundary: &JordanCurve,
    w0: Point,
    settings: &ExtrapolationSettings,
) -> Result<ReducedModuleResult> {
    check_interior(boundary, w0)?;
    let f = settings.fractions;
    if !(f[0] < 1.0 && f.iter().all(|x| *x > 0.0) && f[1] < f[0] && f[2] < f[1]) {
        return Err(arg("puncture fractions must be decreasing in (0, 1)"));
    }
    if settings.n_angular < 16 || settings.nodes_per_log < 8 {
        return Err(arg("extrapolation grid too coarse"));
    }
    let profile = polar_profile(boundary, w0)?;
    let pts = boundary.points();
    let d = pts.iter().map(|p| (p - w0).norm()).fold(f64::INFINITY, f64::min);
    let ell_max = pts.iter().map(|p| (p - w0).norm().ln()).fold(f64::NEG_INFINITY, f64::max);

    let rhos: Vec<f64> = f.iter().map(|x| x * d).collect();
    let solve = |rho: f64, coarse: bool| -> Result<f64> {
        let span = ell_max - rho.ln();
        let mut nl = (settings.nodes_per_log as f64 * span).ceil() as usize + 1;
        let mut na = settings.n_angular;
        if coarse {
            nl = nl / 2 + 1;
            na /= 2;
        }
        Ok(punctured_module(&profile, ell_max, rho, nl.max(9), na)? + rho.ln())
    };
    let jobs: Vec<(f64, bool)> = rhos.iter().flat_map(|&r| [(r, false), (r, true)]).collect();
    let values: Vec<Result<f64>> = jobs.par_iter().map(|&(r, c)| solve(r, c)).collect();
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let fine: Vec<f64> = values.iter().step_by(2).copied().collect();
    let discretisation = values.chunks(2).map(|c| (c[0] - c[1]).abs()).fold(0.0, f64::max);

    let a = Matrix3::from_fn(|i, j| match j {
        0 => 1.0,
        1 => rhos[i].powi(2),
        _ => rhos[i].powi(3),
    });
    let coef = a
        .lu()
        .solve(&Vector3::new(fine[0], fine[1], fine[2]))
        .ok_or_else(|| QcError::Extrapolation { sequence: fine.clone() })?;
    let limit = coef[0];
    // Richardson on the two smallest punctures, assuming only the ρ² term
    let (r1, r2) = (rhos[1], rhos[2]);
    let two_term = (fine[2] * r1 * r1 - fine[1] * r2 * r2) / (r1 * r1 - r2 * r2);
    if !limit.is_finite() {
        return Err(QcError::Extrapolation { sequence: fine });
    }
    Ok(ReducedModuleResult {
        value: limit,
        method: ReducedMethod::Extrapolation,
        tolerance: (limit - two_term).abs() + discretisation,
    })
}

/// The sequence `Mod(F(A_{ζ,ρ,r})) + ln ρ` and its extrapolated limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleDefect {
    pub zeta: Point,
    pub r: f64,
    pub rhos: Vec<f64>,
    pub values: Vec<f64>,
    pub limit: f64,
    pub tolerance: f64,
    /// Observed ratio of successive differences, when they are resolvable.
    pub contraction: Option<f64>,
}

fn check_rhos(r: f64, rhos: &[f64]) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(arg(format!("outer radius must be positive, got {r}")));
    }
    if rhos.len() < 3 {
        return Err(arg(format!("need at least 3 inner radii, got {}", rhos.len())));
    }
    if rhos.iter().any(|&p| !(p > 0.0 && p < r)) {
        return Err(arg(format!("inner radii must lie in (0, {r})")));
    }
    for w in rhos.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            return Err(arg("inner radii must decrease with ratio 2"));
        }
    }
    Ok(())
}

/// `lim_{ρ→0} Mod(F^μ̃(A_{ζ,ρ,r})) + ln ρ` by Aitken extrapolation of the
/// dyadic sequence `rhos`. Fails when the successive differences do not shrink.
pub fn module_defect(field: &BeltramiField, zeta: Point, r: f64, rhos: &[f64]) -> Result<ModuleDefect> {
    module_defect_with(field, zeta, r, rhos, &ModuleResolution::default())
}

pub fn module_defect_with(
    field: &BeltramiField,
    zeta: Point,
    r: f64,
    rhos: &[f64],
    res: &ModuleResolution,
) -> Result<ModuleDefect> {
    check_rhos(r, rhos)?;
    let evals: Vec<Result<(f64, f64)>> = rhos
        .par_iter()
        .map(|&rho| {
            let annulus = AnnulusSpec::new(zeta, rho, r)?;
            let (m, tol, _) = image_module(field, &res.grid(&annulus)?)?;
            Ok((m + rho.ln(), tol))
        })
        .collect();
    let evals: Vec<(f64, f64)> = evals.into_iter().collect::<Result<_>>()?;
    let values: Vec<f64> = evals.iter().map(|e| e.0).collect();
    let noise = evals.iter().map(|e| e.1).fold(0.0, f64::max);
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();

    let n = values.len();
    let last = values[n - 1];
    let (limit, tolerance, contraction) = if diffs.iter().all(|d| d.abs() <= noise) {
        // the sequence is flat to discretisation accuracy
        (last, noise, None)
    } else {
        for w in diffs.windows(2) {
            if w[1].abs() >= w[0].abs() && w[1].abs() > noise {
                return Err(QcError::Extrapolation { sequence: values });
            }
        }
        let (d1, d2) = (diffs[n - 3], diffs[n - 2]);
        let q = d2 / d1;
        if !(q.abs() < 1.0) || d2.abs() <= noise {
            (last, d2.abs() + noise, Some(q))
        } else {
            // geometric tail of the differences
            let tail = d2 * q / (1.0 - q);
            (last + tail, tail.abs() + noise, Some(q))
        }
    };
    Ok(ModuleDefect {
        zeta,
        r,
        rhos: rhos.to_vec(),
        values,
        limit,
        tolerance,
        contraction,
    })
}

/// Jordan curve `F(∂D(ζ, r))`: `IMAGE_SAMPLES` points through the solution,
/// resampled to `ROBIN_PANELS` by arclength.
pub fn image_disc_boundary(solution: &QcSolution, zeta: Point, r: f64) -> Result<JordanCurve> {
    let pts: Vec<Point> = (0..IMAGE_SAMPLES)
        .map(|k| solution.eval(zeta + Point::from_polar(r, 2.0 * PI * k as f64 / IMAGE_SAMPLES as f64)))
        .collect::<Result<_>>()?;
    JordanCurve::new(pts)?.resample_arclength(ROBIN_PANELS)
}

/// One sample of `ζ ↦ m(F(D(ζ, r)), F(ζ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuitySample {
    pub zeta: Point,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityProbe {
    pub r: f64,
    pub samples: Vec<ContinuitySample>,
    /// Grid spacing of the solution: jumps below this are not distinguishable
    /// from continuous variation.
    pub resolution_floor: f64,
}

impl ContinuityProbe {
    /// Largest difference between cyclically adjacent samples.
    pub fn max_adjacent_jump(&self) -> f64 {
        let n = self.samples.len();
        (0..n)
            .map(|k| (self.samples[(k + 1) % n].value - self.samples[k].value).abs())
            .fold(0.0, f64::max)
    }
}

pub fn continuity_probe(solution: &QcSolution, zetas: &[Point], r: f64) -> Result<ContinuityProbe> {
    if !(r > 0.0) {
        return Err(arg("probe radius must be positive"));
    }
    let samples: Vec<Result<ContinuitySample>> = zetas
        .par_iter()
        .map(|&zeta| {
            let curve = image_disc_boundary(solution, zeta, r)?;
            let res = reduced_module(&curve, solution.eval(zeta)?)?;
            Ok(ContinuitySample {
                zeta,
                value: res.value,
                tolerance: res.tolerance,
            })
        })
        .collect();
    Ok(ContinuityProbe {
        r,
        samples: samples.into_iter().collect::<Result<_>>()?,
        resolution_floor: solution.grid().h(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DiscSpec;

    fn circle(c: Point, r: f64, n: usize) -> JordanCurve {
        JordanCurve::new(DiscSpec::new(c, r).unwrap().boundary(n)).unwrap()
    }

    fn ellipse(c: Point, a: f64, b: f64, n: usize) -> JordanCurve {
        let pts = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                c + Point::new(a * t.cos(), b * t.sin())
            })
            .collect();
        JordanCurve::new(pts).unwrap()
    }

    #[test]
    fn disc_value_is_log_radius() {
        let res = reduced_module(&circle(Point::new(0.0, 0.0), 0.7, 400), Point::new(0.0, 0.0)).unwrap();
        assert!((res.value - 0.7f64.ln()).abs() < 1e-6, "{res:?}");
        assert_eq!(res.method, ReducedMethod::RobinSolve);
    }

    #[test]
    fn off_center_disc_matches_mobius_closed_form() {
        let w0 = Point::new(0.3, 0.2);
        let res = reduced_module(&circle(Point::new(0.0, 0.0), 1.0, 400), w0).unwrap();
        let exact = (1.0 - w0.norm_sqr()).ln();
        assert!((res.value - exact).abs() < 1e-8, "{} vs {exact}", res.value);
    }

    #[test]
    fn spectral_derivative_of_circle() {
        let n = 64;
        let pts: Vec<Point> = (0..n).map(|k| Point::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).collect();
        let d = spectral_derivative(&pts, 1);
        let dd = spectral_derivative(&pts, 2);
        for k in 0..n {
            assert!((d[k] - Point::new(0.0, 1.0) * pts[k]).norm() < 1e-12);
            assert!((dd[k] + pts[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_exterior_and_boundary_points() {
        let c = circle(Point::new(0.0, 0.0), 1.0, 64);
        assert!(matches!(reduced_module(&c, Point::new(2.0, 0.0)), Err(QcError::Domain(_))));
        assert!(matches!(reduced_module(&c, c.points()[3]), Err(QcError::Domain(_))));
    }

    #[test]
    fn rejects_collapsed_samples() {
        // a thin spike: one sample far out between two close neighbours
        let mut pts = DiscSpec::new(Point::new(0.0, 0.0), 1.0).unwrap().boundary(64);
        let t = 2.0 * PI * 10.5 / 64.0;
        pts.insert(11, Point::from_polar(3.0, t));
        let curve = JordanCurve::new(pts).unwrap();
        assert!(matches!(reduced_module(&curve, Point::new(0.0, 0.0)), Err(QcError::Geometry(_))));
    }

    #[test]
    fn extrapolation_oracle_on_disc() {
        let c = circle(Point::new(0.0, 0.0), 0.7, 256);
        let res = reduced_module_extrapolated(&c, Point::new(0.0, 0.0)).unwrap();
        assert!((res.value - 0.7f64.ln()).abs() < 1e-3, "{res:?}");
    }

    #[test]
    fn nested_ellipses_are_monotone() {
        let w0 = Point::new(0.1, 0.05);
        let inner = reduced_module(&ellipse(Point::new(0.0, 0.0), 0.8, 0.5, 256), w0).unwrap().value;
        let outer = reduced_module(&ellipse(Point::new(0.0, 0.0), 1.0, 0.6, 256), w0).unwrap().value;
        assert!(inner <= outer);
    }

    #[test]
    fn rho_list_validation() {
        assert!(check_rhos(0.5, &[0.1, 0.05]).is_err());
        assert!(check_rhos(0.5, &[0.1, 0.05, 0.02]).is_err());
        assert!(check_rhos(0.5, &[0.6, 0.3, 0.15]).is_err());
        assert!(check_rhos(0.5, &[0.2, 0.1, 0.05]).is_ok());
    }

    #[test]
    fn zero_field_defect_is_log_r() {
        let res = ModuleResolution {
            radial_per_log: 16.0,
            min_radial: 16,
            n_angular: 64,
        };
        let d = module_defect_with(&BeltramiField::zero(), Point::new(1.0, 0.0), 0.5, &[0.1, 0.05, 0.025], &res).unwrap();
        assert!((d.limit - 0.5f64.ln()).abs() < 1e-8, "{d:?}");
    }
}
