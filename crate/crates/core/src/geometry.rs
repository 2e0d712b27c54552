//! Plane geometry shared by every solver: round annuli and discs, the polar
//! and Cartesian grids, sampled Jordan curves and the quadrature of annulus
//! and unit-disc intersections.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arg, QcError, Result};
use crate::quadrature::{arc_inside_disc, arc_rule, ArcSet, GaussLegendre};

/// A point of the plane, `z = x + iy`.
pub type Point = Complex64;

pub(crate) fn finite(z: Point) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// The round annulus `{ r_inner < |z − center| < r_outer }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    center: Point,
    r_inner: f64,
    r_outer: f64,
}

impl AnnulusSpec {
    pub fn new(center: Point, r_inner: f64, r_outer: f64) -> Result<Self> {
        if !finite(center) {
            return Err(arg("annulus center must be finite"));
        }
        if !(r_inner > 0.0 && r_inner.is_finite()) {
            return Err(arg(format!("annulus inner radius must be positive, got {r_inner}")));
        }
        if !(r_outer.is_finite() && r_inner < r_outer) {
            return Err(arg(format!(
                "annulus needs r_inner < r_outer < inf, got {r_inner} and {r_outer}"
            )));
        }
        Ok(Self {
            center,
            r_inner,
            r_outer,
        })
    }

    pub fn center(&self) -> Point {
        self.center
    }
    pub fn r_inner(&self) -> f64 {
        self.r_inner
    }
    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }

    pub fn contains(&self, z: Point) -> bool {
        let d = (z - self.center).norm();
        self.r_inner < d && d < self.r_outer
    }
}

/// Module of a round annulus, `ln(r_outer / r_inner)`.
pub fn mod_round_annulus(spec: &AnnulusSpec) -> f64 {
    (spec.r_outer / spec.r_inner).ln()
}

/// The open disc `D(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscSpec {
    center: Point,
    radius: f64,
}

impl DiscSpec {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !finite(center) {
            return Err(arg("disc center must be finite"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(arg(format!("disc radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn unit() -> Self {
        Self {
            center: Point::new(0.0, 0.0),
            radius: 1.0,
        }
    }

    pub fn center(&self) -> Point {
        self.center
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `n` points of the boundary circle, counter-clockwise from angle 0.
    pub fn boundary(&self, n: usize) -> Vec<Point> {
        (0..n)
            .map(|k| self.center + Point::from_polar(self.radius, 2.0 * PI * k as f64 / n as f64))
            .collect()
    }
}

/// Radial node spacing of a polar grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialSpacing {
    /// Nodes uniform in `ln r`; the measure `dr/r` gets uniform weight.
    LogUniform,
    /// Nodes uniform in `r`.
    Uniform,
}

/// Tensor-product grid on an annulus in `(r, θ)`, periodic in θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarAnnulusGrid {
    spec: AnnulusSpec,
    n_radial: usize,
    n_angular: usize,
    spacing: RadialSpacing,
}

impl PolarAnnulusGrid {
    pub fn new(spec: AnnulusSpec, n_radial: usize, n_angular: usize) -> Result<Self> {
        Self::with_spacing(spec, n_radial, n_angular, RadialSpacing::LogUniform)
    }

    pub fn with_spacing(
        spec: AnnulusSpec,
        n_radial: usize,
        n_angular: usize,
        spacing: RadialSpacing,
    ) -> Result<Self> {
        if n_radial < 8 {
            return Err(arg(format!("polar grid needs n_radial >= 8, got {n_radial}")));
        }
        if n_angular < 16 {
            return Err(arg(format!("polar grid needs n_angular >= 16, got {n_angular}")));
        }
        Ok(Self {
            spec,
            n_radial,
            n_angular,
            spacing,
        })
    }

    /// Grid sized by resolution per octave of radius ratio.
    pub fn with_density(spec: AnnulusSpec, per_octave: usize, n_angular: usize) -> Result<Self> {
        let octaves = (spec.r_outer / spec.r_inner).log2();
        let n_radial = ((per_octave as f64 * octaves).ceil() as usize + 1).max(8);
        Self::new(spec, n_radial, n_angular)
    }

    /// The same annulus with both grid dimensions halved (rounded up to the minimums).
    pub fn coarsened(&self) -> Result<Self> {
        let n_radial = ((self.n_radial - 1) / 2 + 1).max(8);
        let n_angular = (self.n_angular / 2).max(16);
        Self::with_spacing(self.spec, n_radial, n_angular, self.spacing)
    }

    pub fn spec(&self) -> &AnnulusSpec {
        &self.spec
    }
    pub fn n_radial(&self) -> usize {
        self.n_radial
    }
    pub fn n_angular(&self) -> usize {
        self.n_angular
    }
    pub fn spacing(&self) -> RadialSpacing {
        self.spacing
    }

    pub fn radii(&self) -> Vec<f64> {
        let (a, b) = (self.spec.r_inner, self.spec.r_outer);
        let m = (self.n_radial - 1) as f64;
        (0..self.n_radial)
            .map(|i| {
                let t = i as f64 / m;
                match self.spacing {
                    RadialSpacing::LogUniform => (a.ln() + t * (b / a).ln()).exp(),
                    RadialSpacing::Uniform => a + t * (b - a),
                }
            })
            .collect()
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n_angular)
            .map(|j| 2.0 * PI * j as f64 / self.n_angular as f64)
            .collect()
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        let r = self.radii()[i];
        self.spec.center + Point::from_polar(r, 2.0 * PI * j as f64 / self.n_angular as f64)
    }
}

/// Uniform `n × n` grid on the periodic box `[-L, L)²`, cell size `2L / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianGrid {
    half_width: f64,
    n: usize,
}

impl CartesianGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width >= 2.0 && half_width.is_finite()) {
            return Err(arg(format!(
                "grid half-width must be at least 2 to contain the closed unit disc, got {half_width}"
            )));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(arg(format!("grid size must be a power of two >= 16, got {n}")));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }
    pub fn len(&self) -> usize {
        self.n * self.n
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major index (`iy * n + ix`).
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }

    pub fn node(&self, ix: usize, iy: usize) -> Point {
        Point::new(self.coord(ix), self.coord(iy))
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.n).flat_map(move |iy| (0..self.n).map(move |ix| self.node(ix, iy)))
    }
}

/// Complex samples on the nodes of a [`CartesianGrid`].
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: CartesianGrid,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: CartesianGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(arg(format!(
                "grid function needs {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: CartesianGrid, f: impl Fn(Point) -> Complex64) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &CartesianGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[self.grid.index(ix, iy)]
    }

    fn locate(&self, z: Point, stencil: usize) -> Result<(usize, usize, f64, f64)> {
        let h = self.grid.h();
        let n = self.grid.n;
        let fx = (z.re + self.grid.half_width) / h;
        let fy = (z.im + self.grid.half_width) / h;
        // The upper hull edge is the last node, L - h.
        let margin = (stencil / 2 - 1) as f64;
        let upper = (n - 1) as f64 - margin;
        if !finite(z) || fx < margin || fy < margin || fx > upper || fy > upper {
            return Err(QcError::Domain(format!(
                "query point {z} outside the interpolation hull of the grid"
            )));
        }
        let ix = (fx.floor() as usize).min(n - 2);
        let iy = (fy.floor() as usize).min(n - 2);
        Ok((ix, iy, fx - ix as f64, fy - iy as f64))
    }

    /// Bilinear interpolation; exact at nodes and for affine fields.
    pub fn interp_bilinear(&self, z: Point) -> Result<Complex64> {
        let (ix, iy, tx, ty) = self.locate(z, 2)?;
        let v00 = self.at(ix, iy);
        let v10 = self.at(ix + 1, iy);
        let v01 = self.at(ix, iy + 1);
        let v11 = self.at(ix + 1, iy + 1);
        Ok(v00 * ((1.0 - tx) * (1.0 - ty)) + v10 * (tx * (1.0 - ty)) + v01 * ((1.0 - tx) * ty) + v11 * (tx * ty))
    }

    /// Bicubic (Catmull-Rom) interpolation; exact at nodes and for quadratic fields.
    /// Falls back to bilinear in the outermost cell layer.
    pub fn interp_bicubic(&self, z: Point) -> Result<Complex64> {
        let (ix, iy, tx, ty) = match self.locate(z, 4) {
            Ok(loc) => loc,
            Err(_) => return self.interp_bilinear(z),
        };
        let wx = catmull_rom_weights(tx);
        let wy = catmull_rom_weights(ty);
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, wyb) in wy.iter().enumerate() {
            let row = iy + b - 1;
            let mut racc = Complex64::new(0.0, 0.0);
            for (a, wxa) in wx.iter().enumerate() {
                racc += self.at(ix + a - 1, row) * *wxa;
            }
            acc += racc * *wyb;
        }
        Ok(acc)
    }
}

fn catmull_rom_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Complex samples on a [`PolarAnnulusGrid`]; the index is `i * n_angular + j`.
#[derive(Debug, Clone)]
pub struct PolarFunction {
    pub grid: PolarAnnulusGrid,
    pub values: Vec<Complex64>,
}

impl PolarFunction {
    pub fn new(grid: PolarAnnulusGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_radial * grid.n_angular {
            return Err(arg("polar function size does not match its grid"));
        }
        Ok(Self { grid, values })
    }

    /// Bilinear interpolation in `(ln r, θ)` (or `(r, θ)` for uniform spacing).
    pub fn interp(&self, z: Point) -> Result<Complex64> {
        let spec = self.grid.spec;
        let w = z - spec.center;
        let r = w.norm();
        if !(r >= spec.r_inner && r <= spec.r_outer) {
            return Err(QcError::Domain(format!("query point {z} outside the polar grid")));
        }
        let m = (self.grid.n_radial - 1) as f64;
        let fr = match self.grid.spacing {
            RadialSpacing::LogUniform => (r / spec.r_inner).ln() / (spec.r_outer / spec.r_inner).ln(),
            RadialSpacing::Uniform => (r - spec.r_inner) / (spec.r_outer - spec.r_inner),
        } * m;
        let na = self.grid.n_angular;
        let ft = w.arg().rem_euclid(2.0 * PI) / (2.0 * PI) * na as f64;
        let i = (fr.floor() as usize).min(self.grid.n_radial - 2);
        let j = (ft.floor() as usize) % na;
        let (tr, tt) = (fr - i as f64, ft - ft.floor());
        let j1 = (j + 1) % na;
        let at = |i: usize, j: usize| self.values[i * na + j];
        Ok(at(i, j) * ((1.0 - tr) * (1.0 - tt))
            + at(i + 1, j) * (tr * (1.0 - tt))
            + at(i, j1) * ((1.0 - tr) * tt)
            + at(i + 1, j1) * (tr * tt))
    }
}

/// Quadrature nodes and `dx dy` weights.
#[derive(Debug, Clone, Default)]
pub struct QuadratureSet {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureSet {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        crate::quadrature::pairwise_sum(&self.weights)
    }

    pub fn integrate(&self, mut f: impl FnMut(Point) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .collect();
        crate::quadrature::pairwise_sum(&terms)
    }
}

/// Resolution of [`annulus_disc_overlap`].
#[derive(Debug, Clone, Copy)]
pub struct OverlapResolution {
    /// Gauss-Legendre points per radial panel.
    pub radial_points: usize,
    /// Radial panels per octave of radius.
    pub panels_per_octave: usize,
    /// Gauss-Legendre points per half arc.
    pub arc_points: usize,
    /// Uniform points on arcs that are full circles.
    pub full_points: usize,
}

impl Default for OverlapResolution {
    fn default() -> Self {
        Self {
            radial_points: 10,
            panels_per_octave: 4,
            arc_points: 24,
            full_points: 96,
        }
    }
}

/// Radii in `(a, b)` where the arc structure of a polar circle about `center`
/// changes against the disc `D(disc_center, disc_radius)`.
pub(crate) fn arc_breakpoints(center: Point, disc_center: Point, disc_radius: f64, a: f64, b: f64) -> Vec<f64> {
    let d = (disc_center - center).norm();
    let mut cuts = vec![a];
    for c in [(disc_radius - d).abs(), disc_radius + d] {
        if c > a && c < b {
            cuts.push(c);
        }
    }
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    cuts
}

/// Radial quadrature in `ln r` on `[a, b]`, graded geometrically towards the
/// interior breakpoints where arcs appear or close.
pub(crate) fn log_radial_rule(
    cuts: &[f64],
    res: &OverlapResolution,
    rule: &GaussLegendre,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let grade_levels = 6;
    let last = cuts.len() - 1;
    for (k, w) in cuts.windows(2).enumerate() {
        let (la, lb) = (w[0].ln(), w[1].ln());
        let octaves = (lb - la) / std::f64::consts::LN_2;
        let n_panels = ((octaves * res.panels_per_octave as f64).ceil() as usize).max(1);
        let mut panels: Vec<(f64, f64)> = (0..n_panels)
            .map(|p| {
                let t0 = p as f64 / n_panels as f64;
                let t1 = (p + 1) as f64 / n_panels as f64;
                (la + t0 * (lb - la), la + t1 * (lb - la))
            })
            .collect();
        // refine the panels touching an interior breakpoint
        let grade_lo = k > 0;
        let grade_hi = k + 1 < last;
        if grade_lo {
            let (a0, b0) = panels.remove(0);
            panels.extend(crate::quadrature::graded_panels(a0, b0, grade_levels, false));
        }
        if grade_hi {
            let (a1, b1) = panels.pop().unwrap();
            panels.extend(crate::quadrature::graded_panels(a1, b1, grade_levels, true));
        }
        panels.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for (pa, pb) in panels {
            out.extend(rule.on(pa, pb));
        }
    }
    out
}

/// Quadrature over `A ∩ D(disc)`: polar about the annulus center, arcs computed
/// exactly for each radius, radial rule in `ln r`.
pub fn annulus_disc_overlap_with(spec: &AnnulusSpec, disc: &DiscSpec, res: &OverlapResolution) -> QuadratureSet {
    let radial_rule = GaussLegendre::new(res.radial_points);
    let arc_gl = GaussLegendre::new(res.arc_points);
    let cuts = arc_breakpoints(spec.center, disc.center, disc.radius, spec.r_inner, spec.r_outer);
    let mut set = QuadratureSet::default();
    for (s, ws) in log_radial_rule(&cuts, res, &radial_rule) {
        let r = s.exp();
        let arc = arc_inside_disc(spec.center, r, disc.center, disc.radius);
        if arc == ArcSet::Empty {
            continue;
        }
        for (phi, wphi) in arc_rule(arc, &arc_gl, res.full_points) {
            set.nodes.push(spec.center + Point::from_polar(r, phi));
            // dx dy = r² d(ln r) dφ
            set.weights.push(ws * wphi * r * r);
        }
    }
    set
}

/// Quadrature nodes/weights for `A ∩ 𝔻` at the default resolution.
pub fn annulus_disc_overlap(spec: &AnnulusSpec) -> QuadratureSet {
    annulus_disc_overlap_with(spec, &DiscSpec::unit(), &OverlapResolution::default())
}

/// Ordered samples of a closed curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanCurve {
    points: Vec<Point>,
}

impl JordanCurve {
    /// Validates sample count, simplicity and orientation. A clockwise sample
    /// order is rejected rather than silently reversed.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 16 {
            return Err(QcError::Geometry(format!(
                "a Jordan curve needs at least 16 samples, got {}",
                points.len()
            )));
        }
        if points.iter().any(|&p| !finite(p)) {
            return Err(QcError::Geometry("curve samples must be finite".into()));
        }
        let curve = Self { points };
        if curve.signed_area() <= 0.0 {
            return Err(QcError::Geometry("curve must be positively oriented".into()));
        }
        curve.check_simple()?;
        Ok(curve)
    }

    /// Like [`JordanCurve::new`], reversing clockwise input.
    pub fn new_oriented(mut points: Vec<Point>) -> Result<Self> {
        if points.len() >= 3 && shoelace(&points) < 0.0 {
            points.reverse();
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        shoelace(&self.points)
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n).map(|k| (self.points[(k + 1) % n] - self.points[k]).norm()).sum()
    }

    pub fn translated(&self, by: Point) -> Self {
        Self {
            points: self.points.iter().map(|&p| p + by).collect(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            points: self.points.iter().map(|&p| p * s).collect(),
        }
    }

    /// Winding number of the closed polyline about `w`.
    pub fn winding_number(&self, w: Point) -> i64 {
        let n = self.points.len();
        let mut total = 0.0;
        for k in 0..n {
            let a = self.points[k] - w;
            let b = self.points[(k + 1) % n] - w;
            total += (b / a).arg();
        }
        (total / (2.0 * PI)).round() as i64
    }

    pub fn distance_to(&self, w: Point) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|k| segment_distance(w, self.points[k], self.points[(k + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    fn check_simple(&self) -> Result<()> {
        let n = self.points.len();
        let pts = &self.points;
        for k in 0..n {
            if (pts[(k + 1) % n] - pts[k]).norm() == 0.0 {
                return Err(QcError::Geometry(format!("repeated sample at index {k}")));
            }
        }
        // uniform bucketing keeps the pairwise test near-linear for smooth curves
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for p in pts {
            lo = Point::new(lo.re.min(p.re), lo.im.min(p.im));
            hi = Point::new(hi.re.max(p.re), hi.im.max(p.im));
        }
        let cells = ((n as f64).sqrt().ceil() as usize).max(1);
        let span = Point::new((hi.re - lo.re).max(1e-300), (hi.im - lo.im).max(1e-300));
        let cell_of = |p: Point| {
            let cx = (((p.re - lo.re) / span.re) * cells as f64).floor().clamp(0.0, (cells - 1) as f64) as usize;
            let cy = (((p.im - lo.im) / span.im) * cells as f64).floor().clamp(0.0, (cells - 1) as f64) as usize;
            (cx, cy)
        };
        let mut buckets = vec![Vec::<usize>::new(); cells * cells];
        for k in 0..n {
            let (a, b) = (cell_of(pts[k]), cell_of(pts[(k + 1) % n]));
            for cx in a.0.min(b.0)..=a.0.max(b.0) {
                for cy in a.1.min(b.1)..=a.1.max(b.1) {
                    buckets[cy * cells + cx].push(k);
                }
            }
        }
        for bucket in &buckets {
            for (u, &i) in bucket.iter().enumerate() {
                for &j in &bucket[u + 1..] {
                    let adjacent = (i + 1) % n == j || (j + 1) % n == i;
                    if adjacent {
                        continue;
                    }
                    if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                        return Err(QcError::Geometry(format!(
                            "curve self-intersects between segments {i} and {j}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Resamples to `m` points equally spaced in arclength, using periodic
    /// cubic interpolation of the samples against cumulative chord length.
    pub fn resample_arclength(&self, m: usize) -> Result<Self> {
        let n = self.points.len();
        let mut s = vec![0.0; n + 1];
        for k in 0..n {
            s[k + 1] = s[k] + (self.points[(k + 1) % n] - self.points[k]).norm();
        }
        let total = s[n];
        let spline = crate::circle_map::PeriodicSpline::with_knots(&s, &self.points, total)?;
        let pts = (0..m).map(|k| spline.eval(total * k as f64 / m as f64)).collect();
        Self::new(pts)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for p in &self.points {
            out.push_str(&format!("{:.17e},{:.17e}\n", p.re, p.im));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (lineno == 0 && line.starts_with(['x', 'X'])) {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let parse = |v: Option<&str>| -> Result<f64> {
                v.ok_or_else(|| QcError::Parse(format!("line {}: expected two columns", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| QcError::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let x = parse(parts.next())?;
            let y = parse(parts.next())?;
            points.push(Point::new(x, y));
        }
        Self::new(points)
    }
}

fn shoelace(points: &[Point]) -> f64 {
    let n = points.len();
    let terms: Vec<f64> = (0..n)
        .map(|k| {
            let a = points[k];
            let b = points[(k + 1) % n];
            a.re * b.im - b.re * a.im
        })
        .collect();
    0.5 * crate::quadrature::pairwise_sum(&terms)
}

fn cross(a: Point, b: Point) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn segment_distance(w: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (w - a).norm();
    }
    let t = (((w - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (w - (a + ab * t)).norm()
}
