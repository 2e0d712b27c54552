//! The normalised quasiconformal map of the plane with coefficient `μ̃`
//! (conformal outside the unit disc), computed spectrally on a periodic box.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::circle_map::{CircleMap, Interpolation};
use crate::error::{arg, QcError, Result};
use crate::field::BeltramiField;
use crate::geometry::{CartesianGrid, GridFunction, Point};

/// Largest coefficient bound the solver accepts.
pub const MAX_DILATATION_BOUND: f64 = 0.9;

/// Möbius transformation `w ↦ (a w + b) / (c w + d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mobius {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self { a: one, b: zero, c: zero, d: one }
    }

    /// The map sending `(w1, w2, w3)` to `(0, 1, ∞)`.
    fn to_standard(w1: Point, w2: Point, w3: Point) -> Self {
        Self {
            a: w2 - w3,
            b: -w1 * (w2 - w3),
            c: w2 - w1,
            d: -w3 * (w2 - w1),
        }
    }

    /// The unique Möbius map sending `from[k]` to `to[k]`.
    pub fn three_point(from: [Point; 3], to: [Point; 3]) -> Result<Self> {
        let distinct = |p: &[Point; 3]| {
            (p[0] - p[1]).norm() > 1e-12 && (p[1] - p[2]).norm() > 1e-12 && (p[0] - p[2]).norm() > 1e-12
        };
        if !distinct(&from) || !distinct(&to) {
            return Err(QcError::Degenerate("three-point normalisation needs distinct points".into()));
        }
        let t = Self::to_standard(from[0], from[1], from[2]);
        let s = Self::to_standard(to[0], to[1], to[2]);
        Ok(s.inverse().compose(&t).scaled())
    }

    pub fn apply(&self, w: Point) -> Point {
        (self.a * w + self.b) / (self.c * w + self.d)
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &Mobius) -> Self {
        Self {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Representative with unit determinant, `d` on the principal branch.
    fn scaled(&self) -> Self {
        let det = self.a * self.d - self.b * self.c;
        let s = det.sqrt();
        let mut m = Self {
            a: self.a / s,
            b: self.b / s,
            c: self.c / s,
            d: self.d / s,
        };
        if m.a.re < 0.0 {
            m = Self { a: -m.a, b: -m.b, c: -m.c, d: -m.d };
        }
        m
    }
}

/// Solver controls beyond tolerance and iteration cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Sub-samples per side used to average `μ` over cells cut by the circle.
    pub subsamples: usize,
    /// Samples of the boundary trace.
    pub trace_samples: usize,
    /// Offset `δ` of the sampling circle `|z| = 1 + δ`, in grid cells.
    pub trace_offset_cells: f64,
    /// Fourier modes whose continuation to the circle amplifies by more than
    /// `e^{trace_cutoff}` are discarded.
    pub trace_cutoff: f64,
    /// Largest admissible disagreement between traces continued from two radii.
    pub trace_tolerance: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            subsamples: 4,
            trace_samples: 1024,
            trace_offset_cells: 2.0,
            trace_cutoff: 2.0,
            trace_tolerance: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iterations: usize,
    /// `‖h_{n+1} − h_n‖₂` (area-weighted) per iteration.
    pub residuals: Vec<f64>,
}

/// Telemetry of the boundary trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    /// `max | |f| − 1 |` over the samples, before any projection.
    pub radial_defect: f64,
    /// `max |f_δ − f_{δ'}|` between continuations from two sampling radii.
    pub consistency: f64,
    pub sampling_radius: f64,
    pub retained_modes: usize,
}

/// Sampled normalised solution `F` of `∂_z̄ F = μ̃ ∂_z F` and its boundary trace.
#[derive(Debug, Clone)]
pub struct QcSolution {
    field: BeltramiField,
    map: GridFunction,
    trace: CircleMap,
    trace_report: TraceReport,
    stats: IterationStats,
    normalization: Mobius,
    /// `F(1), F(i), F(−1)` before normalisation.
    raw_fixed_points: [Point; 3],
}

/// Sidecar written next to the CSV dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionMetadata {
    pub field: String,
    pub half_width: f64,
    pub n: usize,
    pub normalization: Mobius,
    pub raw_fixed_points: [Point; 3],
    pub stats: IterationStats,
    pub trace: TraceReport,
}

struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn run(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        data.par_chunks_mut(n).for_each(|row| fft.process(row));
        let mut t = transpose(data, n);
        t.par_chunks_mut(n).for_each(|col| fft.process(col));
        data.copy_from_slice(&transpose(&t, n));
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
        let s = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

fn transpose(data: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (0..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                for j in bj..(bj + B).min(n) {
                    out[j * n + i] = data[i * n + j];
                }
            }
        }
    }
    out
}

/// Index-space wavenumbers `π m / L` in FFT order.
fn wavenumbers(grid: &CartesianGrid) -> Vec<f64> {
    let n = grid.n() as i64;
    (0..n)
        .map(|m| {
            let m = if m < n / 2 { m } else { m - n };
            PI * m as f64 / grid.half_width()
        })
        .collect()
}

/// `μ̃` at grid nodes; nodes whose cell is cut by the circle get the cell average.
pub fn sample_coefficient(field: &BeltramiField, grid: &CartesianGrid, subsamples: usize) -> Vec<Complex64> {
    let n = grid.n();
    let h = grid.h();
    let m = subsamples.max(1);
    (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (ix, iy) = (idx % n, idx / n);
            let z = grid.node(ix, iy);
            if ((z.norm() - 1.0).abs()) > 0.75 * h {
                return field.eval(z);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..m {
                for b in 0..m {
                    let dx = ((a as f64 + 0.5) / m as f64 - 0.5) * h;
                    let dy = ((b as f64 + 0.5) / m as f64 - 0.5) * h;
                    acc += field.eval(z + Point::new(dx, dy));
                }
            }
            acc / (m * m) as f64
        })
        .collect()
}

pub fn solve_extended(field: &BeltramiField, grid: &CartesianGrid, tol: f64, max_iter: usize) -> Result<QcSolution> {
    solve_extended_with(
        field,
        grid,
        &SolverSettings {
            tol,
            max_iter,
            ..SolverSettings::default()
        },
    )
}

pub fn solve_extended_with(field: &BeltramiField, grid: &CartesianGrid, settings: &SolverSettings) -> Result<QcSolution> {
    if !(settings.tol > 0.0) {
        return Err(arg(format!("tolerance must be positive, got {}", settings.tol)));
    }
    if settings.max_iter == 0 {
        return Err(arg("max_iter must be at least 1"));
    }
    let k = field.ess_sup_bound();
    if k > MAX_DILATATION_BOUND {
        return Err(arg(format!(
            "coefficient bound {k} exceeds the supported maximum {MAX_DILATATION_BOUND}"
        )));
    }
    let n = grid.n();
    let cell = grid.h() * grid.h();
    let mu = sample_coefficient(field, grid, settings.subsamples);
    let fft = Fft2::new(n);
    let kv = wavenumbers(grid);
    let beurling: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (kx, ky) = (kv[idx % n], kv[idx / n]);
            if kx == 0.0 && ky == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(kx, -ky) / Complex64::new(kx, ky)
            }
        })
        .collect();

    // h = μ(1 + S h), h₀ = μ
    let mut h = mu.clone();
    let mut residuals = Vec::new();
    let mut work = vec![Complex64::new(0.0, 0.0); n * n];
    let mut converged = false;
    for _ in 0..settings.max_iter {
        work.copy_from_slice(&h);
        fft.forward(&mut work);
        work.par_iter_mut().zip(&beurling).for_each(|(w, s)| *w *= s);
        fft.inverse(&mut work);
        let next: Vec<Complex64> = mu
            .par_iter()
            .zip(&work)
            .map(|(m, sh)| m * (Complex64::new(1.0, 0.0) + sh))
            .collect();
        let diff: Vec<f64> = next.iter().zip(&h).map(|(a, b)| (a - b).norm_sqr()).collect();
        let res = (crate::quadrature::pairwise_sum(&diff) * cell).sqrt();
        residuals.push(res);
        h = next;
        if res <= settings.tol {
            converged = true;
            break;
        }
        let r = &residuals;
        let len = r.len();
        if len > 6 && r[len - 1] > r[len - 2] && r[len - 2] > r[len - 3] && r[len - 3] > r[len - 4] {
            break;
        }
    }
    if !converged {
        return Err(QcError::Convergence {
            iterations: residuals.len(),
            last_residual: *residuals.last().unwrap_or(&f64::NAN),
            residuals,
        });
    }
    let iterations = residuals.len();

    // F = z + C_per h + mean(h)·z̄, where C_per inverts ∂_z̄ on mean-free data
    let mean = h.iter().sum::<Complex64>() / (n * n) as f64;
    work.copy_from_slice(&h);
    fft.forward(&mut work);
    work.par_iter_mut().enumerate().for_each(|(idx, w)| {
        let (kx, ky) = (kv[idx % n], kv[idx / n]);
        if kx == 0.0 && ky == 0.0 {
            *w = Complex64::new(0.0, 0.0);
        } else {
            *w /= Complex64::new(0.0, 0.5) * Complex64::new(kx, ky);
        }
    });
    fft.inverse(&mut work);
    let raw: Vec<Complex64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let z = grid.node(idx % n, idx / n);
            z + work[idx] + mean * z.conj()
        })
        .collect();
    let raw_map = GridFunction::new(*grid, raw)?;
    let targets = [Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(-1.0, 0.0)];
    let raw_fixed_points = [
        raw_map.interp_bicubic(targets[0])?,
        raw_map.interp_bicubic(targets[1])?,
        raw_map.interp_bicubic(targets[2])?,
    ];
    let normalization = Mobius::three_point(raw_fixed_points, targets)?;
    let values: Vec<Complex64> = raw_map.values().par_iter().map(|&w| normalization.apply(w)).collect();
    let map = GridFunction::new(*grid, values)?;
    let (trace, trace_report) = extract_trace(&map, settings)?;
    Ok(QcSolution {
        field: field.clone(),
        map,
        trace,
        trace_report,
        stats: IterationStats { iterations, residuals },
        normalization,
        raw_fixed_points,
    })
}

/// Continues `F` from the circle `|z| = R` to the unit circle mode by mode,
/// using that `F` is holomorphic for `|z| > 1`.
fn continued_trace(map: &GridFunction, radius: f64, n: usize, cutoff: f64) -> Result<(Vec<Point>, usize)> {
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut data: Vec<Complex64> = (0..n)
        .map(|k| map.interp_bicubic(Point::from_polar(radius, 2.0 * PI * k as f64 / n as f64)))
        .collect::<Result<_>>()?;
    fwd.process(&mut data);
    let ln_r = radius.ln();
    let mut kept = 0;
    for (k, c) in data.iter_mut().enumerate() {
        let m = if k < n / 2 { k as i64 } else { k as i64 - n as i64 };
        let gain = -(m as f64) * ln_r;
        if gain > cutoff || (m.unsigned_abs() as usize) * 2 == n {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= gain.exp();
            kept += 1;
        }
    }
    inv.process(&mut data);
    let s = 1.0 / n as f64;
    Ok((data.into_iter().map(|v| v * s).collect(), kept))
}

fn extract_trace(map: &GridFunction, settings: &SolverSettings) -> Result<(CircleMap, TraceReport)> {
    let h = map.grid().h();
    let n = settings.trace_samples;
    let r1 = 1.0 + settings.trace_offset_cells * h;
    let r2 = 1.0 + (settings.trace_offset_cells + 1.0) * h;
    let (values, kept) = continued_trace(map, r1, n, settings.trace_cutoff)?;
    let (check, _) = continued_trace(map, r2, n, settings.trace_cutoff)?;
    let consistency = values.iter().zip(&check).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let radial_defect = values.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max);
    if !(consistency <= settings.trace_tolerance) {
        return Err(QcError::TraceQuality(format!(
            "traces continued from |z| = {r1:.4} and {r2:.4} differ by {consistency:.3e}"
        )));
    }
    let trace = CircleMap::from_samples(values, Interpolation::PeriodicCubic)
        .map_err(|e| QcError::TraceQuality(format!("sampled trace is not a circle homeomorphism: {e}")))?;
    Ok((
        trace,
        TraceReport {
            radial_defect,
            consistency,
            sampling_radius: r1,
            retained_modes: kept,
        },
    ))
}

/// Spread of the difference quotients `(F(ζ₀ + ρe^{iθ}) − F(ζ₀)) / (ρe^{iθ})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientSpread {
    pub radius: f64,
    /// `max |q| / min |q|`.
    pub modulus_ratio: f64,
    /// `max arg q − min arg q`, measured about the circular mean.
    pub argument_spread: f64,
}

/// Area-weighted RMS of the Beltrami residual in two regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalityResidual {
    /// `|∂_z̄F − μ̃ ∂_zF|` for `|z| < 1 − 4h`.
    pub interior: f64,
    /// `|∂_z̄F|` for `1 + 4h < |z| < L − 4h`.
    pub exterior: f64,
}

impl QcSolution {
    pub fn field(&self) -> &BeltramiField {
        &self.field
    }
    pub fn grid(&self) -> &CartesianGrid {
        self.map.grid()
    }
    pub fn samples(&self) -> &GridFunction {
        &self.map
    }
    pub fn trace(&self) -> &CircleMap {
        &self.trace
    }
    pub fn trace_report(&self) -> &TraceReport {
        &self.trace_report
    }
    pub fn stats(&self) -> &IterationStats {
        &self.stats
    }
    pub fn normalization(&self) -> &Mobius {
        &self.normalization
    }

    /// `F(z)` by bicubic interpolation of the grid samples.
    pub fn eval(&self, z: Point) -> Result<Point> {
        self.map.interp_bicubic(z)
    }

    /// `|F(1) − 1| + |F(i) − i| + |F(−1) + 1|`.
    pub fn normalization_error(&self) -> Result<f64> {
        Ok((self.eval(Point::new(1.0, 0.0))? - 1.0).norm()
            + (self.eval(Point::new(0.0, 1.0))? - Point::new(0.0, 1.0)).norm()
            + (self.eval(Point::new(-1.0, 0.0))? + 1.0).norm())
    }

    /// The trace resampled at `n_samples` points.
    pub fn boundary_trace(&self, n_samples: usize) -> Result<CircleMap> {
        if n_samples == self.trace.len() {
            return Ok(self.trace.clone());
        }
        let settings = SolverSettings {
            trace_samples: n_samples,
            ..SolverSettings::default()
        };
        Ok(extract_trace(&self.map, &settings)?.0)
    }

    /// Smallest radius the probes accept: four grid cells.
    pub fn resolution_floor(&self) -> f64 {
        4.0 * self.grid().h()
    }

    pub fn conformality_probe(&self, zeta0: Point, radii: &[f64]) -> Result<Vec<QuotientSpread>> {
        if (zeta0.norm() - 1.0).abs() > 1e-12 {
            return Err(arg(format!("probe point {zeta0} must lie on the unit circle")));
        }
        let f0 = self.trace.eval(zeta0.arg());
        radii
            .iter()
            .map(|&rho| {
                if rho < self.resolution_floor() {
                    return Err(QcError::Resolution(format!(
                        "radius {rho} is below four grid cells ({})",
                        self.resolution_floor()
                    )));
                }
                let q: Vec<Complex64> = (0..64)
                    .map(|j| {
                        let d = Point::from_polar(rho, 2.0 * PI * j as f64 / 64.0);
                        Ok((self.eval(zeta0 + d)? - f0) / d)
                    })
                    .collect::<Result<_>>()?;
                let mods: Vec<f64> = q.iter().map(|v| v.norm()).collect();
                let max = mods.iter().cloned().fold(0.0, f64::max);
                let min = mods.iter().cloned().fold(f64::INFINITY, f64::min);
                let mean_dir = q.iter().map(|v| v / v.norm()).sum::<Complex64>();
                let args: Vec<f64> = q.iter().map(|v| (v / mean_dir).arg()).collect();
                let amax = args.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let amin = args.iter().cloned().fold(f64::INFINITY, f64::min);
                Ok(QuotientSpread {
                    radius: rho,
                    modulus_ratio: max / min,
                    argument_spread: amax - amin,
                })
            })
            .collect()
    }

    fn wirtinger(&self, ix: usize, iy: usize) -> (Complex64, Complex64) {
        let g = self.grid();
        let v = self.map.values();
        let h2 = 2.0 * g.h();
        let fx = (v[g.index(ix + 1, iy)] - v[g.index(ix - 1, iy)]) / h2;
        let fy = (v[g.index(ix, iy + 1)] - v[g.index(ix, iy - 1)]) / h2;
        let i = Complex64::i();
        ((fx - i * fy) * 0.5, (fx + i * fy) * 0.5)
    }

    /// Central-difference Beltrami residuals inside and outside the disc.
    pub fn conformality_residual(&self) -> ConformalityResidual {
        let g = self.grid();
        let n = g.n();
        let h = g.h();
        let outer = g.half_width() - 4.0 * h;
        let mut inner = Vec::new();
        let mut outer_terms = Vec::new();
        for iy in 1..n - 1 {
            for ix in 1..n - 1 {
                let z = g.node(ix, iy);
                let r = z.norm();
                if r < 1.0 - 4.0 * h {
                    let (fz, fzb) = self.wirtinger(ix, iy);
                    inner.push((fzb - self.field.eval(z) * fz).norm_sqr());
                } else if r > 1.0 + 4.0 * h && z.re.abs() < outer && z.im.abs() < outer {
                    let (_, fzb) = self.wirtinger(ix, iy);
                    outer_terms.push(fzb.norm_sqr());
                }
            }
        }
        let rms = |t: &[f64]| {
            if t.is_empty() {
                0.0
            } else {
                (crate::quadrature::pairwise_sum(t) / t.len() as f64).sqrt()
            }
        };
        ConformalityResidual {
            interior: rms(&inner),
            exterior: rms(&outer_terms),
        }
    }

    /// Smallest discrete Jacobian `|F_z|² − |F_z̄|²` over interior nodes.
    pub fn min_jacobian(&self) -> f64 {
        let n = self.grid().n();
        (1..n - 1)
            .into_par_iter()
            .map(|iy| {
                (1..n - 1)
                    .map(|ix| {
                        let (fz, fzb) = self.wirtinger(ix, iy);
                        fz.norm_sqr() - fzb.norm_sqr()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let g = self.grid();
        let mut out = String::with_capacity(g.len() * 80);
        out.push_str("x,y,re_f,im_f\n");
        for iy in 0..g.n() {
            for ix in 0..g.n() {
                let z = g.node(ix, iy);
                let w = self.map.values()[g.index(ix, iy)];
                out.push_str(&format!("{:.17e},{:.17e},{:.17e},{:.17e}\n", z.re, z.im, w.re, w.im));
            }
        }
        out
    }

    pub fn metadata(&self) -> SolutionMetadata {
        SolutionMetadata {
            field: self.field.to_string(),
            half_width: self.grid().half_width(),
            n: self.grid().n(),
            normalization: self.normalization,
            raw_fixed_points: self.raw_fixed_points,
            stats: self.stats.clone(),
            trace: self.trace_report.clone(),
        }
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn export(&self, dir: &std::path::Path, stem: &str) -> Result<()> {
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        let io = |path: &std::path::Path| {
            let p = path.display().to_string();
            move |source| QcError::Io { path: p, source }
        };
        std::fs::write(&csv, self.to_csv()).map_err(io(&csv))?;
        let meta = serde_json::to_string_pretty(&self.metadata()).map_err(|e| QcError::Parse(e.to_string()))?;
        std::fs::write(&json, meta).map_err(io(&json))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mobius_three_point() {
        let from = [Point::new(0.3, 0.1), Point::new(-0.2, 1.1), Point::new(-1.3, 0.05)];
        let to = [Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(-1.0, 0.0)];
        let m = Mobius::three_point(from, to).unwrap();
        for k in 0..3 {
            assert!((m.apply(from[k]) - to[k]).norm() < 1e-12);
        }
        let id = Mobius::three_point(to, to).unwrap();
        assert!((id.apply(Point::new(0.4, -0.7)) - Point::new(0.4, -0.7)).norm() < 1e-14);
        assert!(Mobius::three_point([to[0], to[0], to[2]], to).is_err());
    }

    #[test]
    fn fft2_round_trip() {
        let n = 16;
        let fft = Fft2::new(n);
        let orig: Vec<Complex64> = (0..n * n).map(|i| Complex64::new(i as f64, -(i as f64).sin())).collect();
        let mut d = orig.clone();
        fft.forward(&mut d);
        fft.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_field_is_identity() {
        let grid = CartesianGrid::new(2.0, 64).unwrap();
        let sol = solve_extended(&BeltramiField::zero(), &grid, 1e-8, 200).unwrap();
        for (z, w) in grid.nodes().zip(sol.samples().values()) {
            assert!((z - w).norm() < 1e-12);
        }
        assert!(sol.trace_report().radial_defect < 1e-10);
        assert!(sol.normalization_error().unwrap() < 1e-12);
    }

    #[test]
    fn rejects_large_dilatation() {
        let grid = CartesianGrid::new(2.0, 64).unwrap();
        let f = BeltramiField::constant(0.95).unwrap();
        assert!(matches!(solve_extended(&f, &grid, 1e-8, 200), Err(QcError::Argument(_))));
        assert!(solve_extended(&BeltramiField::zero(), &grid, 0.0, 200).is_err());
    }

    #[test]
    fn iteration_cap_reports_residual_trace() {
        let grid = CartesianGrid::new(2.0, 64).unwrap();
        let f = BeltramiField::radial_stretch(0.5).unwrap();
        match solve_extended(&f, &grid, 1e-14, 3) {
            Err(QcError::Convergence { iterations, residuals, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(residuals.len(), 3);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }
}
