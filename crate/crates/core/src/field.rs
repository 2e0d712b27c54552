//! Beltrami coefficients on the unit disc, extended by zero to the plane, and
//! the integrals of `|μ|` that decide integrability against the hyperbolic
//! measure and conformality at boundary points.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arg, QcError, Result};
use crate::geometry::{arc_breakpoints, finite, log_radial_rule, DiscSpec, OverlapResolution, Point};
use crate::quadrature::{arc_inside_disc, arc_rule, pairwise_sum, ArcSet, GaussLegendre};

/// Unimodular factor multiplying the modulus profile of a family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Phase {
    /// The constant factor `e^{iφ}`.
    Uniform(f64),
    /// The factor `e^{imθ}`, `θ = arg z` (taken as 1 at the origin).
    Angular(i32),
}

impl Phase {
    fn at(&self, z: Point) -> Complex64 {
        match *self {
            Phase::Uniform(phi) => Complex64::from_polar(1.0, phi),
            Phase::Angular(m) => {
                if z.norm_sqr() == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, m as f64 * z.arg())
                }
            }
        }
    }
}

impl Default for Phase {
    fn default() -> Self {
        Phase::Uniform(0.0)
    }
}

/// Regularly sampled coefficient, bilinearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCoefficient {
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    nx: usize,
    ny: usize,
    values: Vec<Complex64>,
}

impl SampledCoefficient {
    /// Samples in row-major order (`x` fastest) on the lattice `(x0 + i dx, y0 + j dy)`.
    pub fn new(x0: f64, y0: f64, dx: f64, dy: f64, nx: usize, ny: usize, values: Vec<Complex64>) -> Result<Self> {
        if nx < 2 || ny < 2 || values.len() != nx * ny {
            return Err(arg(format!(
                "sampled coefficient needs nx, ny >= 2 and nx*ny values (nx={nx}, ny={ny}, got {})",
                values.len()
            )));
        }
        if !(dx > 0.0 && dy > 0.0) {
            return Err(arg("sample spacing must be positive"));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(v.norm() < 1.0)) {
            return Err(arg(format!("sample {k} has |mu| = {} >= 1", v.norm())));
        }
        Ok(Self {
            x0,
            y0,
            dx,
            dy,
            nx,
            ny,
            values,
        })
    }

    /// Parses the grid-field CSV: a `# nx=<int> ny=<int>` line, a column header
    /// `x,y,re_mu,im_mu`, then `nx·ny` rows with `x` varying fastest.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, dims) = lines.next().ok_or_else(|| QcError::Parse("empty grid field file".into()))?;
        let (nx, ny) = parse_dims(dims)?;
        let (hno, header) = lines
            .next()
            .ok_or_else(|| QcError::Parse("missing column header".into()))?;
        let cols: Vec<String> = header.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
        if cols != ["x", "y", "re_mu", "im_mu"] {
            return Err(QcError::Parse(format!(
                "line {}: expected header x,y,re_mu,im_mu, got {header}",
                hno + 1
            )));
        }
        let mut xs = Vec::with_capacity(nx * ny);
        let mut ys = Vec::with_capacity(nx * ny);
        let mut values = Vec::with_capacity(nx * ny);
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(QcError::Parse(format!("line {}: expected 4 columns", lineno + 1)));
            }
            let mut nums = [0.0; 4];
            for (slot, f) in nums.iter_mut().zip(&fields) {
                *slot = f
                    .parse()
                    .map_err(|e| QcError::Parse(format!("line {}: {e}", lineno + 1)))?;
            }
            let mu = Complex64::new(nums[2], nums[3]);
            if !(mu.norm() < 1.0) {
                return Err(QcError::Parse(format!(
                    "line {}: |mu| = {} >= 1 is not a Beltrami coefficient",
                    lineno + 1,
                    mu.norm()
                )));
            }
            xs.push(nums[0]);
            ys.push(nums[1]);
            values.push(mu);
        }
        if values.len() != nx * ny {
            return Err(QcError::Parse(format!(
                "header declares {}x{} samples but file has {} rows",
                nx,
                ny,
                values.len()
            )));
        }
        let dx = xs[1] - xs[0];
        let dy = ys[nx] - ys[0];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let ex = xs[0] + i as f64 * dx;
                let ey = ys[0] + j as f64 * dy;
                if (xs[k] - ex).abs() > 1e-9 * (1.0 + ex.abs()) || (ys[k] - ey).abs() > 1e-9 * (1.0 + ey.abs()) {
                    return Err(QcError::Parse(format!(
                        "row {k}: samples must lie on a regular lattice with x varying fastest"
                    )));
                }
            }
        }
        Self::new(xs[0], ys[0], dx, dy, nx, ny, values)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# nx={} ny={}\nx,y,re_mu,im_mu\n", self.nx, self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let v = self.values[j * self.nx + i];
                out.push_str(&format!(
                    "{:.17e},{:.17e},{:.17e},{:.17e}\n",
                    self.x0 + i as f64 * self.dx,
                    self.y0 + j as f64 * self.dy,
                    v.re,
                    v.im
                ));
            }
        }
        out
    }

    fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn eval(&self, z: Point) -> Complex64 {
        let fx = (z.re - self.x0) / self.dx;
        let fy = (z.im - self.y0) / self.dy;
        if fx < 0.0 || fy < 0.0 || fx > (self.nx - 1) as f64 || fy > (self.ny - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let at = |i: usize, j: usize| self.values[j * self.nx + i];
        at(i, j) * ((1.0 - tx) * (1.0 - ty))
            + at(i + 1, j) * (tx * (1.0 - ty))
            + at(i, j + 1) * ((1.0 - tx) * ty)
            + at(i + 1, j + 1) * (tx * ty)
    }
}

fn parse_dims(line: &str) -> Result<(usize, usize)> {
    let body = line.trim().trim_start_matches('#');
    let mut nx = None;
    let mut ny = None;
    for tok in body.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        if let Some((k, v)) = tok.split_once('=') {
            let v: usize = v
                .trim()
                .parse()
                .map_err(|e| QcError::Parse(format!("line 1: bad grid dimension {tok}: {e}")))?;
            match k.trim() {
                "nx" => nx = Some(v),
                "ny" => ny = Some(v),
                _ => {}
            }
        }
    }
    match (nx, ny) {
        (Some(nx), Some(ny)) => Ok((nx, ny)),
        _ => Err(QcError::Parse("line 1: expected '# nx=<int> ny=<int>'".into())),
    }
}

/// Parametrised families of Beltrami coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldFamily {
    Zero,
    /// `c · phase` on the disc.
    Constant { c: f64, phase: Phase },
    /// `c (1 − |z|²)^α · phase`.
    Power { c: f64, alpha: f64, phase: Phase },
    /// `k z / z̄`, the coefficient of `z ↦ z|z|^{K−1}`, `K = (1+k)/(1−k)`.
    RadialStretch { k: f64 },
    /// Radial stretch restricted to `ρ < |z| < 1`.
    RadialStretchRing { k: f64, rho: f64 },
    /// Coefficient of `r e^{iθ} ↦ r e^{i g(θ)}` with `g` of slope `a` on the
    /// upper half disc and `b = 2 − a` on the lower half.
    AngularStretch { a: f64 },
    Grid(SampledCoefficient),
}

/// A Beltrami coefficient `μ` on the unit disc, identically zero for `|z| ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeltramiField {
    family: FieldFamily,
    k: f64,
}

impl BeltramiField {
    pub fn new(family: FieldFamily) -> Result<Self> {
        let k = match &family {
            FieldFamily::Zero => 0.0,
            FieldFamily::Constant { c, .. } => c.abs(),
            FieldFamily::Power { c, alpha, .. } => {
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return Err(arg(format!("power exponent must be positive, got {alpha}")));
                }
                c.abs()
            }
            FieldFamily::RadialStretch { k } => k.abs(),
            FieldFamily::RadialStretchRing { k, rho } => {
                if !(*rho > 0.0 && *rho < 1.0) {
                    return Err(arg(format!("ring radius must lie in (0, 1), got {rho}")));
                }
                k.abs()
            }
            FieldFamily::AngularStretch { a } => {
                if !(*a > 0.0 && *a < 2.0) {
                    return Err(arg(format!("angular slope must lie in (0, 2), got {a}")));
                }
                let b = 2.0 - a;
                ((1.0 - a) / (1.0 + a)).abs().max(((1.0 - b) / (1.0 + b)).abs())
            }
            FieldFamily::Grid(s) => s.max_modulus(),
        };
        if !(k < 1.0 && k.is_finite()) {
            return Err(arg(format!("Beltrami coefficient needs ess sup |mu| < 1, got {k}")));
        }
        Ok(Self { family, k })
    }

    pub fn zero() -> Self {
        Self {
            family: FieldFamily::Zero,
            k: 0.0,
        }
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(FieldFamily::Constant { c, phase: Phase::default() })
    }

    pub fn power(c: f64, alpha: f64) -> Result<Self> {
        Self::new(FieldFamily::Power {
            c,
            alpha,
            phase: Phase::default(),
        })
    }

    pub fn power_with_phase(c: f64, alpha: f64, phase: Phase) -> Result<Self> {
        Self::new(FieldFamily::Power { c, alpha, phase })
    }

    pub fn radial_stretch(k: f64) -> Result<Self> {
        Self::new(FieldFamily::RadialStretch { k })
    }

    pub fn radial_stretch_ring(k: f64, rho: f64) -> Result<Self> {
        Self::new(FieldFamily::RadialStretchRing { k, rho })
    }

    pub fn angular_stretch(a: f64) -> Result<Self> {
        Self::new(FieldFamily::AngularStretch { a })
    }

    pub fn family(&self) -> &FieldFamily {
        &self.family
    }

    /// Bound `k` with `|μ| ≤ k` everywhere.
    pub fn ess_sup_bound(&self) -> f64 {
        self.k
    }

    /// Circles `(center, radius)` across which `μ̃` may jump: the unit circle,
    /// plus any internal circle of the family.
    pub fn interfaces(&self) -> Vec<(Point, f64)> {
        let mut out = vec![(Point::new(0.0, 0.0), 1.0)];
        if let FieldFamily::RadialStretchRing { rho, .. } = self.family {
            out.push((Point::new(0.0, 0.0), rho));
        }
        out
    }

    /// Whether `|μ|` depends on `|z|` only.
    pub fn is_radial_modulus(&self) -> bool {
        !matches!(self.family, FieldFamily::AngularStretch { .. } | FieldFamily::Grid(_))
    }

    /// `μ̃(z)`: the coefficient inside the open disc, zero on and outside the circle.
    pub fn eval(&self, z: Point) -> Complex64 {
        let r2 = z.norm_sqr();
        if !(r2 < 1.0) {
            return Complex64::new(0.0, 0.0);
        }
        let unit_phase = || {
            if r2 == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                z / z.conj()
            }
        };
        match &self.family {
            FieldFamily::Zero => Complex64::new(0.0, 0.0),
            FieldFamily::Constant { c, phase } => phase.at(z) * *c,
            FieldFamily::Power { c, alpha, phase } => {
                let r = r2.sqrt();
                let one_minus = (1.0 - r) * (1.0 + r);
                phase.at(z) * (c * one_minus.powf(*alpha))
            }
            FieldFamily::RadialStretch { k } => unit_phase() * *k,
            FieldFamily::RadialStretchRing { k, rho } => {
                if r2 < rho * rho {
                    Complex64::new(0.0, 0.0)
                } else {
                    unit_phase() * *k
                }
            }
            FieldFamily::AngularStretch { a } => {
                let s = if z.im >= 0.0 { *a } else { 2.0 - a };
                unit_phase() * ((1.0 - s) / (1.0 + s))
            }
            FieldFamily::Grid(s) => s.eval(z),
        }
    }

    pub fn modulus(&self, z: Point) -> f64 {
        self.eval(z).norm()
    }

    /// `(1 + |μ|) / (1 − |μ|)`, the pointwise maximal dilatation.
    pub fn dilatation(&self, z: Point) -> f64 {
        let m = self.modulus(z);
        (1.0 + m) / (1.0 - m)
    }
}

impl fmt::Display for BeltramiField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            FieldFamily::Zero => write!(f, "Zero"),
            FieldFamily::Constant { c, .. } => write!(f, "Constant({c})"),
            FieldFamily::Power { c, alpha, .. } => write!(f, "Power({c}, {alpha})"),
            FieldFamily::RadialStretch { k } => write!(f, "RadialStretch({k})"),
            FieldFamily::RadialStretchRing { k, rho } => write!(f, "RadialStretchRing({k}, {rho})"),
            FieldFamily::AngularStretch { a } => write!(f, "AngularStretch({a})"),
            FieldFamily::Grid(s) => write!(f, "Grid({}x{})", s.nx, s.ny),
        }
    }
}

/// Outcome of a shell-summed improper integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convergence {
    Converged,
    Diverged,
    /// Shell budget exhausted while increments were still decaying.
    Undecided,
}

/// Value of an integral of `|μ|` against a singular weight, or a divergence flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PNormResult {
    pub p: f64,
    /// Finite value; `None` unless `status` is `Converged`.
    pub value: Option<f64>,
    pub status: Convergence,
    pub tolerance: f64,
    /// Per-shell contributions, innermost shell first.
    pub shells: Vec<f64>,
}

impl PNormResult {
    pub fn is_finite(&self) -> bool {
        self.value.is_some()
    }
    pub fn divergent(&self) -> bool {
        self.status == Convergence::Diverged
    }
    pub fn partial_sum(&self) -> f64 {
        pairwise_sum(&self.shells)
    }
}

/// Convergence policy for dyadic shell sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellPolicy {
    /// Last shell index summed (shells `0..=max_shell`).
    pub max_shell: usize,
    /// Cauchy tolerance on the shell increments, relative to `max(1, partial sum)`.
    pub cauchy_tol: f64,
}

impl Default for ShellPolicy {
    fn default() -> Self {
        Self {
            max_shell: 40,
            cauchy_tol: 1e-6,
        }
    }
}

/// Sums nonnegative shell increments under `policy`. `shell(j)` returns the
/// increment and an estimate of its quadrature error.
fn sum_shells(p: f64, policy: &ShellPolicy, mut shell: impl FnMut(usize) -> (f64, f64)) -> PNormResult {
    let mut shells: Vec<f64> = Vec::with_capacity(policy.max_shell + 1);
    let mut quad_err = 0.0;
    for j in 0..=policy.max_shell {
        let (inc, err) = shell(j);
        shells.push(inc);
        quad_err += err;
        let sum = pairwise_sum(&shells);
        let floor = policy.cauchy_tol * sum.max(1.0);
        let n = shells.len();
        if n >= 3 && shells[n - 1] <= floor && shells[n - 2] <= floor {
            let (a, b) = (shells[n - 2], shells[n - 1]);
            let tail = if a > 0.0 && b < a {
                let q = b / a;
                b * q / (1.0 - q)
            } else {
                b
            };
            return PNormResult {
                p,
                value: Some(sum + tail),
                status: Convergence::Converged,
                tolerance: tail + quad_err,
                shells,
            };
        }
        // clear growth: stop early
        if n >= 8 && sum > 1.0 {
            let growing = shells[n - 6..].windows(2).all(|w| w[1] >= 0.999 * w[0] && w[0] > 0.0);
            if growing {
                return diverged(p, shells, quad_err);
            }
        }
    }
    let n = shells.len();
    let recent = &shells[n - 6..];
    let ratios: Vec<f64> = recent
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let mean_ratio = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    if mean_ratio >= 0.97 {
        diverged(p, shells, quad_err)
    } else {
        PNormResult {
            p,
            value: None,
            status: Convergence::Undecided,
            tolerance: quad_err,
            shells,
        }
    }
}

fn diverged(p: f64, shells: Vec<f64>, quad_err: f64) -> PNormResult {
    PNormResult {
        p,
        value: None,
        status: Convergence::Diverged,
        tolerance: quad_err,
        shells,
    }
}

/// Angular nodes on the full circle: composite Gauss-Legendre with panel edges
/// at multiples of π/4, so coefficients with jumps along the axes (sampled and
/// angular-stretch families) integrate without straddled discontinuities.
fn full_circle_rule(points_per_panel: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::new(points_per_panel);
    (0..8)
        .flat_map(|p| {
            let a = p as f64 * PI / 4.0;
            gl.on(a, a + PI / 4.0).collect::<Vec<_>>()
        })
        .collect()
}

/// Integrates `g(z) r dr dφ` over the circle `|z| = r` restricted to `region`.
fn ring_integral(
    field: &BeltramiField,
    r: f64,
    region: Option<&DiscSpec>,
    full: &[(f64, f64)],
    arc_gl: &GaussLegendre,
    g: &impl Fn(Point) -> f64,
) -> f64 {
    let origin = Point::new(0.0, 0.0);
    let arc = match region {
        None => ArcSet::Full,
        Some(d) => arc_inside_disc(origin, r, d.center(), d.radius()),
    };
    let terms: Vec<f64> = match arc {
        ArcSet::Empty => return 0.0,
        ArcSet::Full if field.is_radial_modulus() => {
            return 2.0 * PI * g(Point::new(r, 0.0));
        }
        ArcSet::Full => full.iter().map(|&(phi, w)| w * g(Point::from_polar(r, phi))).collect(),
        arc => arc_rule(arc, arc_gl, 0)
            .into_iter()
            .map(|(phi, w)| w * g(Point::from_polar(r, phi)))
            .collect(),
    };
    pairwise_sum(&terms)
}

/// `∬ |μ|^p dσ` with `dσ = (1 − |z|²)^{−2} dx dy`, over the disc or over
/// `D(center, r) ∩ 𝔻` when `region` is given.
pub fn hyperbolic_p_integral(
    field: &BeltramiField,
    p: f64,
    region: Option<&DiscSpec>,
    policy: &ShellPolicy,
) -> Result<PNormResult> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(arg(format!("p must be positive, got {p}")));
    }
    let fine = GaussLegendre::new(16);
    let coarse = GaussLegendre::new(8);
    let full = full_circle_rule(8);
    let arc_gl = GaussLegendre::new(24);
    let integrand = |z: Point| {
        let m = field.modulus(z);
        if m == 0.0 {
            return 0.0;
        }
        let r = z.norm();
        let w = (1.0 - r) * (1.0 + r);
        m.powf(p) / (w * w)
    };
    // the radial variable is the distance d = 1 − r to the circle
    let shell_value = |rule: &GaussLegendre, j: usize| -> f64 {
        let (d_lo, d_hi) = if j == 0 {
            (0.5, 1.0)
        } else {
            (0.5f64.powi(j as i32 + 1), 0.5f64.powi(j as i32))
        };
        let mut cuts = vec![d_lo, d_hi];
        if let Some(disc) = region {
            for c in arc_breakpoints(Point::new(0.0, 0.0), disc.center(), disc.radius(), 1.0 - d_hi, 1.0 - d_lo) {
                let d = 1.0 - c;
                if d > d_lo && d < d_hi {
                    cuts.push(d);
                }
            }
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        let terms: Vec<f64> = cuts
            .windows(2)
            .flat_map(|w| rule.on(w[0], w[1]).collect::<Vec<_>>())
            .map(|(d, wd)| {
                let r = 1.0 - d;
                wd * r * ring_integral(field, r, region, &full, &arc_gl, &integrand)
            })
            .collect();
        pairwise_sum(&terms)
    };
    Ok(sum_shells(p, policy, |j| {
        let a = shell_value(&fine, j);
        let b = shell_value(&coarse, j);
        (a, (a - b).abs())
    }))
}

/// `∬_𝔻 |μ|^p dσ`, the defining integral of membership in the integrable
/// Teichmüller space `T_p`.
pub fn p_norm(field: &BeltramiField, p: f64) -> Result<PNormResult> {
    hyperbolic_p_integral(field, p, None, &ShellPolicy::default())
}

/// `∬_{D(ζ₀, r) ∩ 𝔻} |μ(z)| / |z − ζ₀|² dx dy` for `ζ₀` on the unit circle,
/// summed over dyadic shells `r 2^{−j−1} < |z − ζ₀| < r 2^{−j}`.
pub fn twb_integral(field: &BeltramiField, zeta0: Point, r: f64) -> Result<PNormResult> {
    twb_integral_with(field, zeta0, r, &ShellPolicy::default())
}

pub fn twb_integral_with(field: &BeltramiField, zeta0: Point, r: f64, policy: &ShellPolicy) -> Result<PNormResult> {
    if !finite(zeta0) || (zeta0.norm() - 1.0).abs() > 1e-12 {
        return Err(arg(format!("probe point {zeta0} must lie on the unit circle")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(arg(format!("radius must be positive, got {r}")));
    }
    let res = OverlapResolution::default();
    let fine = GaussLegendre::new(res.radial_points);
    let coarse = GaussLegendre::new(res.radial_points / 2);
    let arc_gl = GaussLegendre::new(res.arc_points);
    let origin = Point::new(0.0, 0.0);
    let shell_value = |rule: &GaussLegendre, j: usize| -> f64 {
        let rho_hi = r * 0.5f64.powi(j as i32);
        let rho_lo = 0.5 * rho_hi;
        let cuts = arc_breakpoints(zeta0, origin, 1.0, rho_lo, rho_hi);
        let terms: Vec<f64> = log_radial_rule(&cuts, &OverlapResolution { panels_per_octave: 1, ..res }, rule)
            .into_iter()
            .map(|(s, ws)| {
                let rho = s.exp();
                let arc = arc_inside_disc(zeta0, rho, origin, 1.0);
                let inner: Vec<f64> = arc_rule(arc, &arc_gl, res.full_points)
                    .into_iter()
                    .map(|(phi, w)| w * field.modulus(zeta0 + Point::from_polar(rho, phi)))
                    .collect();
                // dx dy / |z − ζ₀|² = d(ln ρ) dφ
                ws * pairwise_sum(&inner)
            })
            .collect();
        pairwise_sum(&terms)
    };
    Ok(sum_shells(1.0, policy, |j| {
        let a = shell_value(&fine, j);
        let b = shell_value(&coarse, j);
        (a, (a - b).abs())
    }))
}

/// The pointwise inequality `1/|z − ζ₀|² < 4/(1 − |z|²)²` for `|z| < 1 = |ζ₀|`,
/// evaluated in the division-free form `(1 − |z|²)² < 4|z − ζ₀|²`.
pub fn check_eq5(z: Point, zeta0: Point) -> bool {
    let r = z.norm();
    let w = (1.0 - r) * (1.0 + r);
    w * w < 4.0 * (z - zeta0).norm_sqr()
}

/// Membership of the coefficient's boundary map in `T_p`, as decided by [`p_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TpVerdict {
    InTp,
    NotInTp,
    Inconclusive,
}

pub fn classify_tp(field: &BeltramiField, p: f64) -> Result<TpVerdict> {
    let result = p_norm(field, p)?;
    Ok(match result.status {
        Convergence::Converged => TpVerdict::InTp,
        Convergence::Diverged => TpVerdict::NotInTp,
        Convergence::Undecided => TpVerdict::Inconclusive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Point {
        Point::new(re, im)
    }

    #[test]
    fn eval_basic_families() {
        assert_eq!(BeltramiField::zero().eval(c(0.3, 0.2)), Complex64::new(0.0, 0.0));
        let rs = BeltramiField::radial_stretch(1.0 / 3.0).unwrap();
        let z = Point::from_polar(0.5, 0.7);
        let expected = Complex64::from_polar(1.0 / 3.0, 1.4);
        assert!((rs.eval(z) - expected).norm() < 1e-15);
        let pw = BeltramiField::power(0.3, 2.0).unwrap();
        assert_eq!(pw.eval(c(1.0, 0.0)).norm(), 0.0);
        assert_eq!(pw.eval(c(0.0, -1.0)).norm(), 0.0);
        assert!((pw.eval(c(0.0, 0.0)).re - 0.3).abs() < 1e-15);
        assert_eq!(rs.eval(c(1.5, 0.0)).norm(), 0.0);
    }

    #[test]
    fn radial_stretch_coefficient_matches_difference_quotients() {
        // F(z) = z|z|, Wirtinger derivatives by central differences
        let f = |z: Point| z * z.norm();
        let z0 = Point::from_polar(0.5, 0.9);
        let h = 1e-6;
        let fx = (f(z0 + h) - f(z0 - h)) / (2.0 * h);
        let fy = (f(z0 + c(0.0, h)) - f(z0 - c(0.0, h))) / (2.0 * h);
        let fz = (fx - Complex64::i() * fy) * 0.5;
        let fzbar = (fx + Complex64::i() * fy) * 0.5;
        let mu = fzbar / fz;
        let field = BeltramiField::radial_stretch(1.0 / 3.0).unwrap();
        assert!((mu - field.eval(z0)).norm() < 1e-8);
    }

    #[test]
    fn angular_stretch_coefficient_matches_difference_quotients() {
        let a = 1.5;
        let g = |t: f64| if t <= PI { a * t } else { a * PI + (2.0 - a) * (t - PI) };
        let f = |z: Point| Point::from_polar(z.norm(), g(z.arg().rem_euclid(2.0 * PI)));
        let field = BeltramiField::angular_stretch(a).unwrap();
        for z0 in [Point::from_polar(0.5, 1.0), Point::from_polar(0.7, 4.0)] {
            let h = 1e-6;
            let fx = (f(z0 + h) - f(z0 - h)) / (2.0 * h);
            let fy = (f(z0 + c(0.0, h)) - f(z0 - c(0.0, h))) / (2.0 * h);
            let mu = (fx + Complex64::i() * fy) / (fx - Complex64::i() * fy);
            assert!((mu - field.eval(z0)).norm() < 1e-6);
        }
    }

    #[test]
    fn field_rejects_large_coefficients() {
        assert!(BeltramiField::constant(1.0).is_err());
        assert!(BeltramiField::power(0.3, 0.0).is_err());
        assert!(BeltramiField::angular_stretch(2.0).is_err());
        assert!(BeltramiField::radial_stretch_ring(0.3, 1.2).is_err());
    }

    #[test]
    fn p_norm_zero_field() {
        let r = p_norm(&BeltramiField::zero(), 1.0).unwrap();
        assert_eq!(r.value, Some(0.0));
        assert!(p_norm(&BeltramiField::zero(), 0.0).is_err());
    }

    /// Independent 1-D oracle: `2π c ∫₀¹ (1−r²)^{α−2} r dr` by the substitution
    /// `u = 1 − r²` and tanh-sinh-free graded Simpson on `u ∈ (0,1)`.
    fn power_norm_oracle(c: f64, alpha: f64) -> f64 {
        // ∫₀¹ u^{α−2} du / 2 with u = e^{−t}: ∫₀^∞ e^{−(α−1)t} dt / 2
        let n = 200_000;
        let t_max = 60.0 / (alpha - 1.0);
        let h = t_max / n as f64;
        let f = |t: f64| (-(alpha - 1.0) * t).exp();
        let mut s = f(0.0) + f(t_max);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        2.0 * PI * c * 0.5 * s * h / 3.0
    }

    #[test]
    fn p_norm_power_closed_form() {
        for (cc, alpha) in [(0.3, 2.0), (0.2, 1.5), (0.5, 3.0)] {
            let field = BeltramiField::power(cc, alpha).unwrap();
            let r = p_norm(&field, 1.0).unwrap();
            let closed = cc * PI / (alpha - 1.0);
            let oracle = power_norm_oracle(cc, alpha);
            assert!((oracle - closed).abs() / closed < 1e-8);
            let v = r.value.expect("finite");
            assert!((v - closed).abs() / closed < 1e-4, "{cc} {alpha}: {v} vs {closed}");
        }
    }

    #[test]
    fn constant_field_diverges() {
        let r = p_norm(&BeltramiField::constant(0.2).unwrap(), 1.0).unwrap();
        assert!(r.divergent());
        // shell sums double, as c·π·2^{j−1}
        let n = r.shells.len();
        let ratio = r.shells[n - 1] / r.shells[n - 2];
        assert!((ratio - 2.0).abs() < 0.05);
    }

    #[test]
    fn classify_families() {
        assert_eq!(classify_tp(&BeltramiField::power(0.3, 2.0).unwrap(), 1.0).unwrap(), TpVerdict::InTp);
        assert_eq!(classify_tp(&BeltramiField::power(0.3, 0.5).unwrap(), 1.0).unwrap(), TpVerdict::NotInTp);
        assert_eq!(
            classify_tp(&BeltramiField::radial_stretch(1.0 / 3.0).unwrap(), 1.0).unwrap(),
            TpVerdict::NotInTp
        );
    }

    #[test]
    fn twb_integral_cases() {
        let one = c(1.0, 0.0);
        let zero = twb_integral(&BeltramiField::zero(), one, 0.5).unwrap();
        assert_eq!(zero.value, Some(0.0));
        let k = twb_integral(&BeltramiField::constant(0.2).unwrap(), one, 0.5).unwrap();
        assert!(k.divergent());
        assert!(twb_integral(&BeltramiField::zero(), c(0.9, 0.0), 0.5).is_err());
    }

    /// Brute-force oracle for the TWB integral: midpoint rule in polar
    /// coordinates about ζ₀, excluding a tiny disc, on a fine grid.
    #[test]
    fn twb_integral_matches_brute_force() {
        let field = BeltramiField::power(0.3, 2.0).unwrap();
        let zeta = c(1.0, 0.0);
        let r: f64 = 0.5;
        let (nr, nt) = (4000, 2000);
        let (lo, hi) = ((1e-6f64).ln(), r.ln());
        let mut acc = 0.0;
        for i in 0..nr {
            let s = lo + (i as f64 + 0.5) * (hi - lo) / nr as f64;
            for j in 0..nt {
                let phi = (j as f64 + 0.5) * 2.0 * PI / nt as f64;
                acc += field.modulus(zeta + Point::from_polar(s.exp(), phi));
            }
        }
        acc *= (hi - lo) / nr as f64 * 2.0 * PI / nt as f64;
        let v = twb_integral(&field, zeta, r).unwrap().value.unwrap();
        assert!((v - acc).abs() / acc < 2e-3, "{v} vs brute force {acc}");
    }

    #[test]
    fn twb_bounded_by_four_times_restricted_norm() {
        for field in [
            BeltramiField::power(0.3, 2.0).unwrap(),
            BeltramiField::power(0.2, 1.5).unwrap(),
            BeltramiField::power(0.5, 3.0).unwrap(),
        ] {
            for (zeta, r) in [(c(1.0, 0.0), 0.5), (Point::from_polar(1.0, 0.8), 0.25), (c(0.0, -1.0), 1.0)] {
                let twb = twb_integral(&field, zeta, r).unwrap().value.unwrap();
                let disc = DiscSpec::new(zeta, r).unwrap();
                let local = hyperbolic_p_integral(&field, 1.0, Some(&disc), &ShellPolicy::default())
                    .unwrap()
                    .value
                    .unwrap();
                assert!(twb <= 4.0 * local, "{field}: {twb} > 4·{local}");
            }
        }
    }

    #[test]
    fn weight_inequality_examples() {
        assert!(check_eq5(c(0.0, 0.0), c(1.0, 0.0)));
        assert!(check_eq5(c(0.9, 0.0), c(1.0, 0.0)));
        assert!(check_eq5(c(-0.9, 0.0), c(1.0, 0.0)));
    }

    #[test]
    fn grid_csv_round_trip_and_rejection() {
        let n = 9;
        let mut values = Vec::new();
        for j in 0..n {
            for i in 0..n {
                values.push(Complex64::new(0.01 * i as f64, -0.02 * j as f64));
            }
        }
        let s = SampledCoefficient::new(-1.0, -1.0, 0.25, 0.25, n, n, values).unwrap();
        let back = SampledCoefficient::from_csv(&s.to_csv()).unwrap();
        assert_eq!(s, back);
        let field = BeltramiField::new(FieldFamily::Grid(back)).unwrap();
        assert!((field.eval(c(-1.0 + 0.25, -1.0 + 0.5)) - Complex64::new(0.01, -0.04)).norm() < 1e-12);
        let bad = "# nx=2 ny=2\nx,y,re_mu,im_mu\n0,0,0.5,0\n1,0,1.0,0\n0,1,0,0\n1,1,0,0\n";
        assert!(SampledCoefficient::from_csv(bad).is_err());
        let short = "# nx=2 ny=2\nx,y,re_mu,im_mu\n0,0,0.5,0\n";
        assert!(SampledCoefficient::from_csv(short).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn p_norm_homogeneous_in_scale(scale in 0.1f64..0.9, alpha in 1.6f64..3.5, p in 0.5f64..2.0) {
            let base = p_norm(&BeltramiField::power(0.5, alpha).unwrap(), p).unwrap();
            let scaled = p_norm(&BeltramiField::power(0.5 * scale, alpha).unwrap(), p).unwrap();
            if let (Some(b), Some(s)) = (base.value, scaled.value) {
                prop_assert!((s - scale.powf(p) * b).abs() <= 1e-4 * s.abs().max(1e-6));
            } else {
                prop_assert_eq!(base.status, scaled.status);
            }
        }

        #[test]
        fn finite_p_norm_implies_finite_q_norm(alpha in 1.2f64..3.0, p in 0.5f64..1.5, dq in 0.1f64..2.0) {
            let field = BeltramiField::power(0.3, alpha).unwrap();
            let np = p_norm(&field, p).unwrap();
            let nq = p_norm(&field, p + dq).unwrap();
            if np.is_finite() {
                prop_assert!(nq.is_finite());
                prop_assert!(nq.value.unwrap() <= np.value.unwrap() + 1e-9);
            }
        }

        #[test]
        fn weight_inequality_holds(r in 0.0f64..0.999, t in 0.0f64..(2.0 * PI), s in 0.0f64..(2.0 * PI)) {
            prop_assert!(check_eq5(Point::from_polar(r, t), Point::from_polar(1.0, s)));
        }
    }
}
