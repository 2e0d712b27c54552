//! Conformal modules of quasiconformal images of round annuli, computed on the
//! parameter annulus as a Dirichlet-energy minimisation with the distortion
//! tensor of `μ̃`, together with the length-area upper and lower estimates.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg, QcError, Result};
use crate::field::BeltramiField;
use crate::geometry::{
    annulus_disc_overlap_with, arc_breakpoints, log_radial_rule, mod_round_annulus, AnnulusSpec, DiscSpec,
    OverlapResolution, Point, PolarAnnulusGrid, RadialSpacing,
};
use crate::quadrature::{arc_inside_disc, arc_rule, pairwise_sum, GaussLegendre};

/// Symmetric 2×2 tensor `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionTensor {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl DistortionTensor {
    pub const IDENTITY: Self = Self { xx: 1.0, xy: 0.0, yy: 1.0 };

    /// `(1 − |μ|²)^{−1} [[(1−a)² + b², −2b], [−2b, (1+a)² + b²]]` for `μ = a + ib`;
    /// pulls the Dirichlet energy of the image back to the parameter plane.
    pub fn from_mu(mu: num_complex::Complex64) -> Self {
        let (a, b) = (mu.re, mu.im);
        let s = 1.0 / (1.0 - mu.norm_sqr());
        Self {
            xx: s * ((1.0 - a) * (1.0 - a) + b * b),
            xy: -2.0 * b * s,
            yy: s * ((1.0 + a) * (1.0 + a) + b * b),
        }
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn inverse(&self) -> Self {
        let d = self.det();
        Self {
            xx: self.yy / d,
            xy: -self.xy / d,
            yy: self.xx / d,
        }
    }

    /// `Rᵀ A R` with `R` the rotation by `theta`: the tensor seen in the polar
    /// frame `(radial, angular)` at angle `theta`.
    pub fn in_polar_frame(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        // columns of R are (c, s) and (−s, c)
        let xx = c * (self.xx * c + self.xy * s) + s * (self.xy * c + self.yy * s);
        let xy = c * (-self.xx * s + self.xy * c) + s * (-self.xy * s + self.yy * c);
        let yy = -s * (-self.xx * s + self.xy * c) + c * (-self.xy * s + self.yy * c);
        Self { xx, xy, yy }
    }

    /// Node samples over a polar grid, index `i * n_angular + j`.
    pub fn sample(field: &BeltramiField, grid: &PolarAnnulusGrid) -> Vec<Self> {
        let na = grid.n_angular();
        (0..grid.n_radial() * na)
            .map(|idx| Self::from_mu(field.eval(grid.node(idx / na, idx % na))))
            .collect()
    }
}

/// How [`mod_image_annulus_auto`] picks its grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModuleResolution {
    /// Radial nodes per unit of `ln r`.
    pub radial_per_log: f64,
    pub min_radial: usize,
    pub n_angular: usize,
}

impl Default for ModuleResolution {
    fn default() -> Self {
        Self {
            radial_per_log: 128.0,
            min_radial: 64,
            n_angular: 512,
        }
    }
}

impl ModuleResolution {
    pub fn grid(&self, annulus: &AnnulusSpec) -> Result<PolarAnnulusGrid> {
        let logs = mod_round_annulus(annulus);
        let n_radial = ((logs * self.radial_per_log).ceil() as usize + 1).max(self.min_radial);
        PolarAnnulusGrid::new(*annulus, n_radial, self.n_angular)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub energy: f64,
    pub n_radial: usize,
    pub n_angular: usize,
    /// Largest radial step in `ln r`.
    pub h_log_r: f64,
    pub h_theta: f64,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// A computed module with its analytic bounds and discretisation tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModuleEstimate {
    pub computed: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub tolerance: f64,
    pub diagnostics: SolveDiagnostics,
}

impl ModuleEstimate {
    /// `lower − tol ≤ computed ≤ upper + tol`.
    pub fn sandwiched(&self) -> bool {
        self.lower_bound - self.tolerance <= self.computed && self.computed <= self.upper_bound + self.tolerance
    }
}

/// Relative residual target of the conjugate-gradient solve.
pub const CG_TOLERANCE: f64 = 1e-10;

/// Nine-point Q1 stiffness operator on the `(ln|z − ζ|, θ)` rectangle, periodic in θ.
pub(crate) struct Stiffness {
    nr: usize,
    na: usize,
    /// Nine coefficients per node, offset `(di, dj)` at `(di + 1) * 3 + (dj + 1)`.
    coef: Vec<[f64; 9]>,
}

const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

impl Stiffness {
    fn assemble(field: &BeltramiField, grid: &PolarAnnulusGrid) -> Self {
        let s: Vec<f64> = grid.radii().iter().map(|r| r.ln()).collect();
        let center = grid.spec().center();
        let interfaces = field.interfaces();
        let tensor_at = |sv: f64, th: f64| {
            let z = center + Point::from_polar(sv.exp(), th);
            DistortionTensor::from_mu(field.eval(z)).in_polar_frame(th)
        };
        Self::assemble_general(&s, grid.n_angular(), &tensor_at, &|s0, hs, th0, ht| {
            cell_laminate_tensor(center, &interfaces, s0, hs, th0, ht, &tensor_at)
        })
    }

    /// Assembly on the rectangle `s × [0, 2π)` for a tensor field in `(s, θ)`;
    /// `effective(s0, hs, θ0, hθ)` may replace the sampled tensor of a cell.
    pub(crate) fn assemble_general(
        s: &[f64],
        na: usize,
        tensor_at: &(impl Fn(f64, f64) -> DistortionTensor + Sync),
        effective: &(impl Fn(f64, f64, f64, f64) -> Option<DistortionTensor> + Sync),
    ) -> Self {
        let nr = s.len();
        let ht = 2.0 * PI / na as f64;
        // element matrices, one row of elements per radial interval
        let elements: Vec<Vec<[[f64; 4]; 4]>> = (0..nr - 1)
            .into_par_iter()
            .map(|i| {
                let hs = s[i + 1] - s[i];
                (0..na)
                    .map(|j| {
                        let th0 = j as f64 * ht;
                        element_matrix(hs, ht, |xi, eta| tensor_at(s[i] + xi * hs, th0 + eta * ht), || {
                            effective(s[i], hs, th0, ht)
                        })
                    })
                    .collect()
            })
            .collect();
        let mut coef = vec![[0.0; 9]; nr * na];
        // corners in (di, dj): N1 (0,0), N2 (1,0), N3 (1,1), N4 (0,1)
        const CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (1, 1), (0, 1)];
        for (i, row) in elements.iter().enumerate() {
            for (j, ke) in row.iter().enumerate() {
                for (a, &(dia, dja)) in CORNERS.iter().enumerate() {
                    let p = (i + dia) * na + (j + dja) % na;
                    for (b, &(dib, djb)) in CORNERS.iter().enumerate() {
                        let di = dib as i64 - dia as i64;
                        let dj = djb as i64 - dja as i64;
                        coef[p][((di + 1) * 3 + (dj + 1)) as usize] += ke[a][b];
                    }
                }
            }
        }
        Self { nr, na, coef }
    }

    /// `y = K x` on all nodes.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (nr, na) = (self.nr, self.na);
        y.par_chunks_mut(na).enumerate().for_each(|(i, yrow)| {
            for (j, yv) in yrow.iter_mut().enumerate() {
                let c = &self.coef[i * na + j];
                let mut acc = 0.0;
                for di in -1i64..=1 {
                    let ii = i as i64 + di;
                    if ii < 0 || ii >= nr as i64 {
                        continue;
                    }
                    let base = ii as usize * na;
                    for dj in -1i64..=1 {
                        let jj = (j as i64 + dj).rem_euclid(na as i64) as usize;
                        acc += c[((di + 1) * 3 + (dj + 1)) as usize] * x[base + jj];
                    }
                }
                *yv = acc;
            }
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        self.coef.iter().map(|c| c[4]).collect()
    }
}

/// Q1 element matrix with the tensor sampled at the 2×2 Gauss points, or a
/// constant effective tensor when a coefficient interface cuts the cell.
fn element_matrix(
    hs: f64,
    ht: f64,
    tensor: impl Fn(f64, f64) -> DistortionTensor,
    effective: impl Fn() -> Option<DistortionTensor>,
) -> [[f64; 4]; 4] {
    let constant = effective();
    let mut ke = [[0.0; 4]; 4];
    for &xi in &GAUSS2 {
        for &eta in &GAUSS2 {
            let b = constant.unwrap_or_else(|| tensor(xi, eta));
            let grads = [
                (-(1.0 - eta) / hs, -(1.0 - xi) / ht),
                ((1.0 - eta) / hs, -xi / ht),
                (eta / hs, xi / ht),
                (-eta / hs, (1.0 - xi) / ht),
            ];
            let w = 0.25 * hs * ht;
            for a in 0..4 {
                let (ga_s, ga_t) = grads[a];
                let bs = b.xx * ga_s + b.xy * ga_t;
                let bt = b.xy * ga_s + b.yy * ga_t;
                for (bidx, &(gb_s, gb_t)) in grads.iter().enumerate() {
                    ke[a][bidx] += w * (bs * gb_s + bt * gb_t);
                }
            }
        }
    }
    ke
}

/// Values of `s = ln t` in `(lo, hi)` where the ray `center + t e^{iθ}` meets
/// the circle `|z − c| = radius`.
fn ray_circle_crossings(center: Point, theta: f64, c: Point, radius: f64, lo: f64, hi: f64, out: &mut Vec<f64>) {
    // t² + 2t Re((ζ − c) e^{−iθ}) + |ζ − c|² − R² = 0
    let d = center - c;
    let bh = (d * Point::from_polar(1.0, -theta)).re;
    let cc = d.norm_sqr() - radius * radius;
    let disc = bh * bh - cc;
    if disc <= 0.0 {
        return;
    }
    let sq = disc.sqrt();
    for t in [-bh - sq, -bh + sq] {
        if t > 0.0 {
            let sv = t.ln();
            if sv > lo && sv < hi {
                out.push(sv);
            }
        }
    }
}

/// Effective tensor of a cell cut by a coefficient interface, as the laminate
/// with layers normal to the interface: harmonic averaging across it,
/// arithmetic along it. Along several θ-lines the cell is split exactly at the
/// crossings and each piece weighted by its length; `None` when no interface
/// cuts the cell.
fn cell_laminate_tensor(
    center: Point,
    interfaces: &[(Point, f64)],
    s0: f64,
    hs: f64,
    th0: f64,
    ht: f64,
    tensor_at: &impl Fn(f64, f64) -> DistortionTensor,
) -> Option<DistortionTensor> {
    const M: usize = 8;
    let s1 = s0 + hs;
    let mut cuts = Vec::new();
    let mut lines = Vec::with_capacity(M);
    let mut cutting: Option<(Point, f64)> = None;
    for b in 0..M {
        let th = th0 + (b as f64 + 0.5) / M as f64 * ht;
        cuts.clear();
        for &(c, r) in interfaces {
            let before = cuts.len();
            ray_circle_crossings(center, th, c, r, s0, s1, &mut cuts);
            if cuts.len() > before && cutting.is_none() {
                cutting = Some((c, r));
            }
        }
        cuts.push(s0);
        cuts.push(s1);
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        lines.push((th, cuts.clone()));
    }
    if cutting.is_none() {
        // interfaces crossing only between sample lines: compare cell corners
        let corners = [(s0, th0), (s1, th0), (s0, th0 + ht), (s1, th0 + ht)];
        cutting = interfaces.iter().copied().find(|&(c, r)| {
            let inside: Vec<bool> = corners
                .iter()
                .map(|&(sv, th)| (center + Point::from_polar(sv.exp(), th) - c).norm() < r)
                .collect();
            inside.iter().any(|&v| v != inside[0])
        });
    }
    let (c, _) = cutting?;
    // interface normal in the (radial, angular) frame at the cell centre; the
    // log-polar chart is conformal, so angles carry over unchanged
    let (sm, tm) = (s0 + 0.5 * hs, th0 + 0.5 * ht);
    let zm = center + Point::from_polar(sm.exp(), tm);
    let psi = ((zm - c) * Point::from_polar(1.0, -tm)).arg();
    let (mut inv11, mut r12, mut schur, mut total) = (0.0, 0.0, 0.0, 0.0);
    for (th, cuts) in &lines {
        for w in cuts.windows(2) {
            let frac = (w[1] - w[0]) / hs;
            if frac > 0.0 {
                let t = tensor_at(0.5 * (w[0] + w[1]), *th).in_polar_frame(psi);
                inv11 += frac / t.xx;
                r12 += frac * t.xy / t.xx;
                schur += frac * (t.yy - t.xy * t.xy / t.xx);
                total += frac;
            }
        }
    }
    let a11 = total / inv11;
    let a12 = a11 * r12 / total;
    let a22 = schur / total + a12 * a12 / a11;
    Some(DistortionTensor { xx: a11, xy: a12, yy: a22 }.in_polar_frame(-psi))
}

fn chunked_dot(a: &[f64], b: &[f64]) -> f64 {
    const CHUNK: usize = 4096;
    let parts: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u * v).sum())
        .collect();
    pairwise_sum(&parts)
}

/// Solves the Dirichlet problem `u = 0` inside, `u = 1` outside; returns the
/// discrete energy and solver statistics.
fn solve_capacity(field: &BeltramiField, grid: &PolarAnnulusGrid) -> Result<(f64, usize, f64)> {
    let s: Vec<f64> = grid.radii().iter().map(|r| r.ln()).collect();
    capacity(&Stiffness::assemble(field, grid), &s)
}

/// Minimal energy `uᵀKu` with `u = 0` on the first node row and `u = 1` on the
/// last, by Jacobi-preconditioned conjugate gradients from a guess linear in `s`.
pub(crate) fn capacity(k: &Stiffness, s: &[f64]) -> Result<(f64, usize, f64)> {
    let (nr, na) = (k.nr, k.na);
    let n = nr * na;
    let is_free = |p: usize| {
        let i = p / na;
        i > 0 && i < nr - 1
    };
    // initial guess linear in ln r
    let mut u = vec![0.0; n];
    for i in 0..nr {
        let t = (s[i] - s[0]) / (s[nr - 1] - s[0]);
        for j in 0..na {
            u[i * na + j] = if i == 0 {
                0.0
            } else if i == nr - 1 {
                1.0
            } else {
                t
            };
        }
    }
    let mut dirichlet = vec![0.0; n];
    dirichlet[(nr - 1) * na..].iter_mut().for_each(|v| *v = 1.0);
    let mut tmp = vec![0.0; n];
    k.apply(&dirichlet, &mut tmp);
    let b_norm = tmp
        .iter()
        .enumerate()
        .filter(|(p, _)| is_free(*p))
        .map(|(_, v)| v * v)
        .sum::<f64>()
        .sqrt();

    let mut r = vec![0.0; n];
    k.apply(&u, &mut r);
    r.iter_mut().enumerate().for_each(|(p, v)| *v = if is_free(p) { -*v } else { 0.0 });
    let diag = k.diagonal();
    let inv_diag: Vec<f64> = diag
        .iter()
        .enumerate()
        .map(|(p, d)| if is_free(p) { 1.0 / d } else { 0.0 })
        .collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = chunked_dot(&r, &z);
    let mut rel = chunked_dot(&r, &r).sqrt() / b_norm;
    let max_iter = 40 * (nr + na) + 1000;
    let mut iterations = 0;
    let mut q = vec![0.0; n];
    while rel > CG_TOLERANCE {
        if iterations >= max_iter {
            return Err(QcError::LinearSolve {
                iterations,
                relative_residual: rel,
            });
        }
        k.apply(&p, &mut q);
        q.iter_mut().enumerate().for_each(|(idx, v)| {
            if !is_free(idx) {
                *v = 0.0
            }
        });
        let alpha = rz / chunked_dot(&p, &q);
        u.par_iter_mut().zip(&p).for_each(|(a, b)| *a += alpha * b);
        r.par_iter_mut().zip(&q).for_each(|(a, b)| *a -= alpha * b);
        z.par_iter_mut()
            .zip(&r)
            .zip(&inv_diag)
            .for_each(|((zv, rv), d)| *zv = rv * d);
        let rz_new = chunked_dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(a, b)| *a = b + beta * *a);
        rel = chunked_dot(&r, &r).sqrt() / b_norm;
        iterations += 1;
    }
    k.apply(&u, &mut tmp);
    let energy = chunked_dot(&u, &tmp);
    Ok((energy, iterations, rel))
}

fn module_on_grid(field: &BeltramiField, grid: &PolarAnnulusGrid) -> Result<(f64, SolveDiagnostics)> {
    let (energy, iterations, relative_residual) = solve_capacity(field, grid)?;
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(QcError::LinearSolve {
            iterations,
            relative_residual,
        });
    }
    let radii = grid.radii();
    let h_log_r = radii.windows(2).map(|w| (w[1] / w[0]).ln()).fold(0.0, f64::max);
    Ok((
        2.0 * PI / energy,
        SolveDiagnostics {
            energy,
            n_radial: grid.n_radial(),
            n_angular: grid.n_angular(),
            h_log_r,
            h_theta: 2.0 * PI / grid.n_angular() as f64,
            iterations,
            relative_residual,
        },
    ))
}

/// `Mod(F(A))` only, without bounds; tolerance from the coarsened grid.
pub fn image_module(field: &BeltramiField, grid: &PolarAnnulusGrid) -> Result<(f64, f64, SolveDiagnostics)> {
    let (fine, diag) = module_on_grid(field, grid)?;
    let (coarse, _) = module_on_grid(field, &grid.coarsened()?)?;
    Ok((fine, (fine - coarse).abs() + 1e-9 * fine.abs(), diag))
}

/// `Mod(F^μ̃(A))` as `2π / E*`, `E*` the minimal pulled-back Dirichlet energy.
pub fn mod_image_annulus(field: &BeltramiField, annulus: &AnnulusSpec, grid: &PolarAnnulusGrid) -> Result<ModuleEstimate> {
    if grid.spec() != annulus {
        return Err(arg("grid does not discretise the requested annulus"));
    }
    let (computed, tolerance, diagnostics) = image_module(field, grid)?;
    Ok(ModuleEstimate {
        computed,
        lower_bound: mod_lower_bound(field, annulus)?,
        upper_bound: mod_upper_bound(field, annulus)?,
        tolerance,
        diagnostics,
    })
}

pub fn mod_image_annulus_auto(field: &BeltramiField, annulus: &AnnulusSpec, res: &ModuleResolution) -> Result<ModuleEstimate> {
    mod_image_annulus(field, annulus, &res.grid(annulus)?)
}

/// `∬_{A ∩ 𝔻} g(z) / |z − ζ|² dx dy`.
fn weighted_overlap_integral(annulus: &AnnulusSpec, g: impl Fn(Point) -> f64) -> f64 {
    let set = annulus_disc_overlap_with(annulus, &DiscSpec::unit(), &OverlapResolution::default());
    let c = annulus.center();
    let terms: Vec<f64> = set
        .nodes
        .iter()
        .zip(&set.weights)
        .map(|(&z, &w)| w * g(z) / (z - c).norm_sqr())
        .collect();
    pairwise_sum(&terms)
}

/// `(1/2π) ∬_A K(z) dx dy / |z − ζ|²` with `K = (1 + |μ̃|)/(1 − |μ̃|)`, written as
/// `Mod(A) + (1/2π) ∬_{A∩𝔻} (K − 1) dx dy / |z − ζ|²`.
pub fn mod_upper_bound(field: &BeltramiField, annulus: &AnnulusSpec) -> Result<f64> {
    let excess = weighted_overlap_integral(annulus, |z| field.dilatation(z) - 1.0);
    if !excess.is_finite() {
        return Err(QcError::Quadrature("upper-bound integral is not finite".into()));
    }
    Ok(mod_round_annulus(annulus) + excess / (2.0 * PI))
}

/// `2π ∫ dr / (r ∫₀^{2π} K dθ)`.
pub fn mod_lower_bound(field: &BeltramiField, annulus: &AnnulusSpec) -> Result<f64> {
    let res = OverlapResolution::default();
    let radial = GaussLegendre::new(res.radial_points);
    let arc_gl = GaussLegendre::new(res.arc_points);
    let c = annulus.center();
    let origin = Point::new(0.0, 0.0);
    let cuts = arc_breakpoints(c, origin, 1.0, annulus.r_inner(), annulus.r_outer());
    let terms: Vec<f64> = log_radial_rule(&cuts, &res, &radial)
        .into_iter()
        .map(|(s, ws)| {
            let r = s.exp();
            let arc = arc_inside_disc(c, r, origin, 1.0);
            let excess: Vec<f64> = arc_rule(arc, &arc_gl, res.full_points)
                .into_iter()
                .map(|(phi, w)| w * (field.dilatation(c + Point::from_polar(r, phi)) - 1.0))
                .collect();
            let theta_sum = 2.0 * PI + pairwise_sum(&excess);
            ws * 2.0 * PI / theta_sum
        })
        .collect();
    let v = pairwise_sum(&terms);
    if !v.is_finite() {
        return Err(QcError::Quadrature("lower-bound integral is not finite".into()));
    }
    Ok(v)
}

/// Deviation of `Mod(F(A_{ζ,ρ₂,ρ₁}))` from `ln(ρ₁/ρ₂)` and its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Claim2Gap {
    pub rho_inner: f64,
    pub rho_outer: f64,
    pub gap: f64,
    /// `(1/(π(1 − k))) ∬_{A∩𝔻} |μ| / |z − ζ|² dx dy`.
    pub bound: f64,
    pub tolerance: f64,
}

impl Claim2Gap {
    pub fn holds(&self) -> bool {
        self.gap.abs() <= self.bound + self.tolerance
    }
}

pub fn claim2_bound(field: &BeltramiField, annulus: &AnnulusSpec) -> f64 {
    let k = field.ess_sup_bound();
    weighted_overlap_integral(annulus, |z| field.modulus(z)) / (PI * (1.0 - k))
}

pub fn claim2_gap(field: &BeltramiField, zeta: Point, rho2: f64, rho1: f64, res: &ModuleResolution) -> Result<Claim2Gap> {
    if !(rho2 > 0.0 && rho2 < rho1) {
        return Err(arg(format!("need 0 < rho2 < rho1, got {rho2}, {rho1}")));
    }
    let annulus = AnnulusSpec::new(zeta, rho2, rho1)?;
    let (m, tolerance, _) = image_module(field, &res.grid(&annulus)?)?;
    Ok(Claim2Gap {
        rho_inner: rho2,
        rho_outer: rho1,
        gap: m - (rho1 / rho2).ln(),
        bound: claim2_bound(field, &annulus),
        tolerance,
    })
}

/// Polar grid with an explicit spacing rule, for convergence studies.
pub fn polar_grid(annulus: &AnnulusSpec, n_radial: usize, n_angular: usize) -> Result<PolarAnnulusGrid> {
    PolarAnnulusGrid::with_spacing(*annulus, n_radial, n_angular, RadialSpacing::LogUniform)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn tensor_identity_and_radial_frame() {
        assert_eq!(DistortionTensor::from_mu(Complex64::new(0.0, 0.0)), DistortionTensor::IDENTITY);
        // radial stretch: diag(1/K, K) in the polar frame at every angle
        let k = 1.0 / 3.0;
        for th in [0.0, 0.7, 2.0, 4.4] {
            let t = DistortionTensor::from_mu(Complex64::from_polar(k, 2.0 * th)).in_polar_frame(th);
            assert!((t.xx - 0.5).abs() < 1e-14 && (t.yy - 2.0).abs() < 1e-14 && t.xy.abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn tensor_has_unit_determinant(r in 0.0f64..0.95, phi in 0.0f64..6.3, th in 0.0f64..6.3) {
            let t = DistortionTensor::from_mu(Complex64::from_polar(r, phi));
            prop_assert!((t.det() - 1.0).abs() < 1e-10);
            prop_assert!((t.in_polar_frame(th).det() - 1.0).abs() < 1e-10);
            prop_assert!(t.xx > 0.0 && t.yy > 0.0);
        }
    }

    #[test]
    fn zero_field_round_annulus() {
        let a = AnnulusSpec::new(Point::new(0.0, 0.0), 0.5, 1.0).unwrap();
        let grid = polar_grid(&a, 32, 64).unwrap();
        let est = mod_image_annulus(&BeltramiField::zero(), &a, &grid).unwrap();
        assert!((est.computed - 2f64.ln()).abs() < 1e-9);
        assert!((est.lower_bound - 2f64.ln()).abs() < 1e-9);
        assert!((est.upper_bound - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn constant_field_bounds_on_interior_annulus() {
        let a = AnnulusSpec::new(Point::new(0.1, 0.0), 0.1, 0.3).unwrap();
        let f = BeltramiField::constant(0.2).unwrap();
        let m = mod_round_annulus(&a);
        assert!((mod_upper_bound(&f, &a).unwrap() - 1.5 * m).abs() < 1e-9);
        assert!((mod_lower_bound(&f, &a).unwrap() - m / 1.5).abs() < 1e-9);
    }

    #[test]
    fn grid_must_match_annulus() {
        let a = AnnulusSpec::new(Point::new(0.0, 0.0), 0.5, 1.0).unwrap();
        let b = AnnulusSpec::new(Point::new(0.0, 0.0), 0.4, 1.0).unwrap();
        let grid = polar_grid(&b, 16, 32).unwrap();
        assert!(mod_image_annulus(&BeltramiField::zero(), &a, &grid).is_err());
    }
}
