//! Experiment configuration: a versioned JSON document listing named experiments.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use qcmod::boundary::SweepSettings;
use qcmod::field::SampledCoefficient;
use qcmod::solver::SolverSettings;
use qcmod::{AnnulusSpec, BeltramiField, CartesianGrid, FieldFamily, JordanCurve, ModuleResolution, Phase, Point};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
/// Coefficients at or above this sup norm are rejected before any solve.
pub const MAX_CONFIG_DILATATION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub experiments: Vec<ExperimentSpec>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("qcmod-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Used as the stem of output files; `[A-Za-z0-9_-]+`, unique in the batch.
    pub name: String,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub value: f64,
    /// Absolute tolerance, added to the computed tolerance of the result.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldConfig {
    Zero,
    Constant {
        c: f64,
        #[serde(default)]
        phase: Phase,
    },
    Power {
        c: f64,
        alpha: f64,
        #[serde(default)]
        phase: Phase,
    },
    RadialStretch {
        k: f64,
    },
    RadialStretchRing {
        k: f64,
        rho: f64,
    },
    AngularStretch {
        a: f64,
    },
    /// Sampled coefficient in the `# nx=.. ny=..` CSV format.
    Grid {
        path: PathBuf,
    },
}

impl FieldConfig {
    pub fn build(&self) -> Result<BeltramiField, String> {
        let family = match self {
            Self::Zero => FieldFamily::Zero,
            Self::Constant { c, phase } => FieldFamily::Constant { c: *c, phase: *phase },
            Self::Power { c, alpha, phase } => FieldFamily::Power {
                c: *c,
                alpha: *alpha,
                phase: *phase,
            },
            Self::RadialStretch { k } => FieldFamily::RadialStretch { k: *k },
            Self::RadialStretchRing { k, rho } => FieldFamily::RadialStretchRing { k: *k, rho: *rho },
            Self::AngularStretch { a } => FieldFamily::AngularStretch { a: *a },
            Self::Grid { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                FieldFamily::Grid(SampledCoefficient::from_csv(&text).map_err(|e| e.to_string())?)
            }
        };
        BeltramiField::new(family).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half_width: 2.0, n: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200 }
    }
}

impl SolverConfig {
    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.tol,
            max_iter: self.max_iter,
            ..SolverSettings::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolutionConfig {
    pub radial_per_log: f64,
    pub min_radial: usize,
    pub n_angular: usize,
}

impl Default for ResolutionConfig {
    fn default() -> Self {
        let r = ModuleResolution::default();
        Self {
            radial_per_log: r.radial_per_log,
            min_radial: r.min_radial,
            n_angular: r.n_angular,
        }
    }
}

impl From<ResolutionConfig> for ModuleResolution {
    fn from(r: ResolutionConfig) -> Self {
        Self {
            radial_per_log: r.radial_per_log,
            min_radial: r.min_radial,
            n_angular: r.n_angular,
        }
    }
}

/// The module route of derivative sweeps; defaults to [`SweepSettings::default`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub r: f64,
    pub first_rho_fraction: f64,
    pub n_rho: usize,
    pub resolution: ResolutionConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let s = SweepSettings::default();
        Self {
            r: s.r,
            first_rho_fraction: s.first_rho_fraction,
            n_rho: s.n_rho,
            resolution: ResolutionConfig {
                radial_per_log: s.resolution.radial_per_log,
                min_radial: s.resolution.min_radial,
                n_angular: s.resolution.n_angular,
            },
        }
    }
}

impl From<SweepConfig> for SweepSettings {
    fn from(s: SweepConfig) -> Self {
        Self {
            r: s.r,
            first_rho_fraction: s.first_rho_fraction,
            n_rho: s.n_rho,
            resolution: s.resolution.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusConfig {
    pub center: [f64; 2],
    pub r_inner: f64,
    pub r_outer: f64,
}

/// Where a circle map comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSource {
    /// Boundary trace of the solved extension of `field`.
    Solve {
        field: FieldConfig,
        #[serde(default)]
        grid: GridConfig,
        #[serde(default)]
        solver: SolverConfig,
    },
    /// The piecewise-linear angular stretch with slopes `a` and `2 − a`.
    AngularStretch {
        a: f64,
        #[serde(default = "default_map_samples")]
        samples: usize,
    },
    Identity {
        #[serde(default = "default_map_samples")]
        samples: usize,
    },
}

fn default_map_samples() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveConfig {
    Circle {
        center: [f64; 2],
        radius: f64,
        #[serde(default = "default_curve_samples")]
        samples: usize,
    },
    Ellipse {
        center: [f64; 2],
        a: f64,
        b: f64,
        #[serde(default = "default_curve_samples")]
        samples: usize,
    },
    /// Ordered `x,y` rows, closed implicitly.
    Csv { path: PathBuf },
}

fn default_curve_samples() -> usize {
    512
}

impl CurveConfig {
    pub fn build(&self) -> Result<JordanCurve, String> {
        let ring = |c: [f64; 2], a: f64, b: f64, n: usize| {
            (0..n)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / n as f64;
                    Point::new(c[0] + a * t.cos(), c[1] + b * t.sin())
                })
                .collect::<Vec<_>>()
        };
        let curve = match self {
            Self::Circle { center, radius, samples } => JordanCurve::new(ring(*center, *radius, *radius, *samples)),
            Self::Ellipse { center, a, b, samples } => JordanCurve::new(ring(*center, *a, *b, *samples)),
            Self::Csv { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                JordanCurve::from_csv(&text)
            }
        };
        curve.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeRoute {
    FiniteDifference,
    Modules,
    Both,
}

/// Jump of `ln|f′|` between the sweep samples bracketing `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpContract {
    pub theta: f64,
    pub expected: f64,
    pub rel_tol: f64,
}

/// `symmetry_ratio(theta, t)` against `expected` within `rel_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioContract {
    pub theta: f64,
    pub t: f64,
    pub expected: f64,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Experiment {
    Solve {
        field: FieldConfig,
        #[serde(default)]
        grid: GridConfig,
        #[serde(default)]
        solver: SolverConfig,
    },
    Pnorm {
        field: FieldConfig,
        p: f64,
        #[serde(default)]
        expect: Option<Expectation>,
    },
    Twb {
        field: FieldConfig,
        /// Probe point `ζ₀ = e^{iθ}`.
        theta: f64,
        r: f64,
        /// Random `(z, ζ₀)` pairs on which the pointwise weight inequality is
        /// checked; drawn from the `--seed` stream.
        #[serde(default)]
        inequality_samples: usize,
    },
    Module {
        field: FieldConfig,
        annulus: AnnulusConfig,
        #[serde(default)]
        resolution: ResolutionConfig,
        #[serde(default)]
        expect: Option<Expectation>,
    },
    ReducedModule {
        curve: CurveConfig,
        w0: [f64; 2],
        /// Also run the (slow) punctured-domain extrapolation oracle.
        #[serde(default)]
        cross_check: bool,
        #[serde(default)]
        expect: Option<Expectation>,
    },
    Derivative {
        map: MapSource,
        thetas: Vec<f64>,
        route: DerivativeRoute,
        /// Finite-difference step; a quarter of the smallest angular gap if absent.
        #[serde(default)]
        h: Option<f64>,
        #[serde(default)]
        sweep: SweepConfig,
    },
    Claim2 {
        field: FieldConfig,
        theta: f64,
        rho1: Vec<f64>,
        #[serde(default = "default_ratio")]
        ratio: f64,
        #[serde(default)]
        resolution: ResolutionConfig,
    },
    Claim3 {
        field: FieldConfig,
        #[serde(default)]
        grid: GridConfig,
        #[serde(default)]
        solver: SolverConfig,
        /// Probe points `e^{iθ_k}`, `θ_k = π/4 + 2πk/n`.
        n_points: usize,
        #[serde(default)]
        sweep: SweepConfig,
        #[serde(default = "default_rel_tol")]
        rel_tol: f64,
    },
    Continuity {
        map: MapSource,
        n_zeta: Vec<usize>,
        route: DerivativeRoute,
        #[serde(default)]
        sweep: SweepConfig,
        /// Require the max adjacent oscillation not to grow along `n_zeta`.
        #[serde(default)]
        expect_refinement: bool,
        #[serde(default)]
        jump: Option<JumpContract>,
    },
    Symmetry {
        map: MapSource,
        ts: Vec<f64>,
        /// Require `sup_θ |ratio − 1|` to decrease along `ts`.
        #[serde(default)]
        expect_decreasing: bool,
        #[serde(default)]
        ratio: Option<RatioContract>,
    },
}

fn default_ratio() -> f64 {
    2.0
}

fn default_rel_tol() -> f64 {
    0.05
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Solve { .. } => "solve",
            Self::Pnorm { .. } => "pnorm",
            Self::Twb { .. } => "twb",
            Self::Module { .. } => "module",
            Self::ReducedModule { .. } => "reduced-module",
            Self::Derivative { .. } => "derivative",
            Self::Claim2 { .. } => "claim2",
            Self::Claim3 { .. } => "claim3",
            Self::Continuity { .. } => "continuity",
            Self::Symmetry { .. } => "symmetry",
        }
    }
}

impl ExperimentConfig {
    /// Parses JSON, reporting the offending field path with line and column.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config {
                field: path,
                message: inner.to_string(),
                line: Some(inner.line()),
                column: Some(inner.column()),
            }
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serialises")
    }

    /// Checks every parameter against the preconditions of the operations it feeds.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.experiments.is_empty() {
            return Err(invalid("experiments", "at least one experiment is required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, spec) in self.experiments.iter().enumerate() {
            let at = |f: &str| if f.is_empty() { format!("experiments[{i}]") } else { format!("experiments[{i}].{f}") };
            if spec.name.is_empty() || !spec.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(invalid(&at("name"), format!("name {:?} must match [A-Za-z0-9_-]+", spec.name)));
            }
            if !seen.insert(spec.name.clone()) {
                return Err(invalid(&at("name"), format!("duplicate experiment name {:?}", spec.name)));
            }
            validate_experiment(&spec.experiment, &at)?;
        }
        Ok(())
    }
}

fn invalid(field: &str, message: String) -> CliError {
    CliError::Config {
        field: field.to_string(),
        message,
        line: None,
        column: None,
    }
}

fn check_field(field: &FieldConfig, at: &str) -> Result<(), CliError> {
    let built = field.build().map_err(|m| invalid(at, m))?;
    let k = built.ess_sup_bound();
    if k >= MAX_CONFIG_DILATATION {
        return Err(invalid(
            at,
            format!("‖μ‖∞ = {k} must be below {MAX_CONFIG_DILATATION}"),
        ));
    }
    Ok(())
}

fn check_grid(grid: &GridConfig, at: &str) -> Result<(), CliError> {
    CartesianGrid::new(grid.half_width, grid.n).map_err(|e| invalid(at, e.to_string()))?;
    if grid.half_width <= 1.5 {
        return Err(invalid(at, format!("half_width {} leaves no room outside the unit disc", grid.half_width)));
    }
    Ok(())
}

fn check_solver(s: &SolverConfig, at: &str) -> Result<(), CliError> {
    if !(s.tol > 0.0) || s.max_iter == 0 {
        return Err(invalid(at, "solver needs tol > 0 and max_iter > 0".into()));
    }
    Ok(())
}

fn check_positive(v: f64, at: &str, what: &str) -> Result<(), CliError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(at, format!("{what} must be positive, got {v}")));
    }
    Ok(())
}

fn check_resolution(r: &ResolutionConfig, at: &str) -> Result<(), CliError> {
    if !(r.radial_per_log > 0.0) || r.min_radial < 3 || r.n_angular < 8 {
        return Err(invalid(at, "resolution needs radial_per_log > 0, min_radial ≥ 3, n_angular ≥ 8".into()));
    }
    Ok(())
}

fn check_sweep(s: &SweepConfig, at: &str) -> Result<(), CliError> {
    check_positive(s.r, &format!("{at}.r"), "sweep radius")?;
    if !(s.first_rho_fraction > 0.0 && s.first_rho_fraction < 1.0) || s.n_rho < 3 {
        return Err(invalid(at, "sweep needs first_rho_fraction in (0, 1) and n_rho ≥ 3".into()));
    }
    check_resolution(&s.resolution, &format!("{at}.resolution"))
}

fn check_map(map: &MapSource, at: &str) -> Result<(), CliError> {
    match map {
        MapSource::Solve { field, grid, solver } => {
            check_field(field, &format!("{at}.field"))?;
            check_grid(grid, &format!("{at}.grid"))?;
            check_solver(solver, &format!("{at}.solver"))
        }
        MapSource::AngularStretch { a, samples } => {
            if !(*a > 0.0 && *a < 2.0) {
                return Err(invalid(&format!("{at}.a"), format!("angular slope must lie in (0, 2), got {a}")));
            }
            if *samples < 16 || samples % 2 != 0 {
                return Err(invalid(&format!("{at}.samples"), "need an even sample count ≥ 16".into()));
            }
            Ok(())
        }
        MapSource::Identity { samples } => {
            if *samples < 16 {
                return Err(invalid(&format!("{at}.samples"), "need at least 16 samples".into()));
            }
            Ok(())
        }
    }
}

fn validate_experiment(e: &Experiment, at: &dyn Fn(&str) -> String) -> Result<(), CliError> {
    match e {
        Experiment::Solve { field, grid, solver } => {
            check_field(field, &at("field"))?;
            check_grid(grid, &at("grid"))?;
            check_solver(solver, &at("solver"))
        }
        Experiment::Pnorm { field, p, .. } => {
            check_field(field, &at("field"))?;
            if !(*p > 0.0 && p.is_finite()) {
                return Err(invalid(&at("p"), format!("p must be positive, got {p}")));
            }
            Ok(())
        }
        Experiment::Twb { field, r, .. } => {
            check_field(field, &at("field"))?;
            check_positive(*r, &at("r"), "radius")
        }
        Experiment::Module {
            field,
            annulus,
            resolution,
            ..
        } => {
            check_field(field, &at("field"))?;
            if !(annulus.r_inner < annulus.r_outer) {
                return Err(invalid(
                    &at("annulus"),
                    format!(
                        "r_inner = {} must be below r_outer = {}",
                        annulus.r_inner, annulus.r_outer
                    ),
                ));
            }
            AnnulusSpec::new(Point::new(annulus.center[0], annulus.center[1]), annulus.r_inner, annulus.r_outer)
                .map_err(|e| invalid(&at("annulus"), e.to_string()))?;
            check_resolution(resolution, &at("resolution"))
        }
        Experiment::ReducedModule { curve, w0, .. } => {
            let c = curve.build().map_err(|m| invalid(&at("curve"), m))?;
            if c.winding_number(Point::new(w0[0], w0[1])) != 1 {
                return Err(invalid(&at("w0"), format!("w0 = {w0:?} is not inside the curve")));
            }
            Ok(())
        }
        Experiment::Derivative {
            map, thetas, h, sweep, route,
        } => {
            check_map(map, &at("map"))?;
            if thetas.is_empty() {
                return Err(invalid(&at("thetas"), "at least one probe angle is required".into()));
            }
            if let Some(h) = h {
                if !(*h > 0.0 && *h < PI / 8.0) {
                    return Err(invalid(&at("h"), format!("step must lie in (0, π/8), got {h}")));
                }
            }
            if *route != DerivativeRoute::FiniteDifference && !matches!(map, MapSource::Solve { .. }) {
                return Err(invalid(&at("route"), "the module route needs a solved field as map source".into()));
            }
            check_sweep(sweep, &at("sweep"))
        }
        Experiment::Claim2 {
            field,
            rho1,
            ratio,
            resolution,
            ..
        } => {
            check_field(field, &at("field"))?;
            if rho1.is_empty() {
                return Err(invalid(&at("rho1"), "at least one outer radius is required".into()));
            }
            for (j, r) in rho1.iter().enumerate() {
                check_positive(*r, &at(&format!("rho1[{j}]")), "outer radius")?;
            }
            if !(*ratio > 1.0) {
                return Err(invalid(&at("ratio"), format!("ratio ρ₁/ρ₂ must exceed 1, got {ratio}")));
            }
            check_resolution(resolution, &at("resolution"))
        }
        Experiment::Claim3 {
            field,
            grid,
            solver,
            n_points,
            sweep,
            rel_tol,
        } => {
            check_field(field, &at("field"))?;
            check_grid(grid, &at("grid"))?;
            check_solver(solver, &at("solver"))?;
            if *n_points == 0 {
                return Err(invalid(&at("n_points"), "at least one probe point is required".into()));
            }
            check_positive(*rel_tol, &at("rel_tol"), "relative tolerance")?;
            check_sweep(sweep, &at("sweep"))
        }
        Experiment::Continuity {
            map, n_zeta, route, sweep, ..
        } => {
            check_map(map, &at("map"))?;
            if n_zeta.is_empty() || n_zeta.iter().any(|&n| n < 16) {
                return Err(invalid(&at("n_zeta"), "each sweep needs at least 16 points".into()));
            }
            match route {
                DerivativeRoute::Both => {
                    return Err(invalid(&at("route"), "a continuity sweep uses a single route".into()))
                }
                DerivativeRoute::Modules if !matches!(map, MapSource::Solve { .. }) => {
                    return Err(invalid(&at("route"), "the module route needs a solved field as map source".into()))
                }
                _ => {}
            }
            check_sweep(sweep, &at("sweep"))
        }
        Experiment::Symmetry { map, ts, ratio, .. } => {
            check_map(map, &at("map"))?;
            if ts.is_empty() {
                return Err(invalid(&at("ts"), "t grid must be nonempty".into()));
            }
            for (j, t) in ts.iter().enumerate() {
                if !(*t > 0.0 && *t < PI / 2.0) {
                    return Err(invalid(&at(&format!("ts[{j}]")), format!("t must lie in (0, π/2), got {t}")));
                }
            }
            if let Some(r) = ratio {
                if !(r.t > 0.0 && r.t < PI / 2.0) {
                    return Err(invalid(&at("ratio.t"), format!("t must lie in (0, π/2), got {}", r.t)));
                }
            }
            Ok(())
        }
    }
}
