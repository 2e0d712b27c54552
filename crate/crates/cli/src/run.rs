//! Execution of a validated configuration.

use std::f64::consts::PI;
use std::time::Instant;

use log::{info, warn};
use qcmod::boundary::{
    derivative_fd, derivative_oscillation, derivative_oscillation_fd, derivative_via_modules_with, quasisymmetry_constant,
    symmetry_deviation, symmetry_ratio, SweepSettings,
};
use qcmod::field::{check_eq5, p_norm, twb_integral, PNormResult};
use qcmod::modules::{claim2_gap, mod_image_annulus_auto};
use qcmod::reduced::{reduced_module, reduced_module_extrapolated};
use qcmod::solver::solve_extended_with;
use qcmod::{AnnulusSpec, BeltramiField, CartesianGrid, CircleMap, Point, QcSolution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{
    DerivativeRoute, Expectation, Experiment, ExperimentConfig, ExperimentSpec, FieldConfig, GridConfig, MapSource,
    SolverConfig,
};
use crate::error::CliError;
use crate::report::{Cell, ContractCheck, ExperimentReport, ExperimentResult, Measurement, Status, Table};

/// Finite-difference step when no spacing between probes is available.
const DEFAULT_FD_STEP: f64 = 0.02;

/// A derivative value with its tolerance, or why it could not be computed.
type Eval = Result<(f64, f64), String>;
/// Agreement demanded of the punctured-domain cross-check.
const REDUCED_CROSS_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Experiments run concurrently on a pool of this many threads.
    pub jobs: usize,
    /// Seed of the sampling stream used by property checks.
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { jobs: 1, seed: 0 }
    }
}

#[derive(Default)]
struct Outcome {
    measurements: Vec<Measurement>,
    contracts: Vec<ContractCheck>,
    tables: Vec<Table>,
}

impl Outcome {
    fn measure(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        self.measurements.push(Measurement {
            name: name.into(),
            value,
            tolerance,
        });
    }

    fn contract(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.contracts.push(ContractCheck {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn expect(&mut self, name: &str, value: f64, tolerance: f64, expect: &Option<Expectation>) {
        if let Some(e) = expect {
            let err = (value - e.value).abs();
            self.contract(
                format!("{name} matches expectation"),
                err <= e.tolerance + tolerance,
                format!("{value} vs {} (|diff| {err:.3e}, allowed {:.3e})", e.value, e.tolerance + tolerance),
            );
        }
    }
}

fn build_field(f: &FieldConfig) -> Result<BeltramiField, CliError> {
    f.build().map_err(|message| CliError::Config {
        field: "field".into(),
        message,
        line: None,
        column: None,
    })
}

fn solve(field: &FieldConfig, grid: &GridConfig, solver: &SolverConfig) -> Result<QcSolution, CliError> {
    let field = build_field(field)?;
    let grid = CartesianGrid::new(grid.half_width, grid.n)?;
    Ok(solve_extended_with(&field, &grid, &solver.settings())?)
}

fn circle_map(source: &MapSource) -> Result<(CircleMap, Option<QcSolution>), CliError> {
    Ok(match source {
        MapSource::Solve { field, grid, solver } => {
            let sol = solve(field, grid, solver)?;
            (sol.trace().clone(), Some(sol))
        }
        MapSource::AngularStretch { a, samples } => (CircleMap::angular_stretch(*a, *samples)?, None),
        MapSource::Identity { samples } => (CircleMap::identity(*samples)?, None),
    })
}

fn polar(theta: f64) -> Point {
    Point::from_polar(1.0, theta)
}

fn min_gap(thetas: &[f64]) -> Option<f64> {
    let mut t: Vec<f64> = thetas.iter().map(|x| x.rem_euclid(2.0 * PI)).collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    if t.len() < 2 {
        return None;
    }
    let wrap = t[0] + 2.0 * PI - t[t.len() - 1];
    Some(t.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::min))
}

fn pnorm_measure(out: &mut Outcome, name: &str, r: &PNormResult) {
    out.measure(format!("{name}_partial_sum"), r.partial_sum(), r.tolerance);
    if let Some(v) = r.value {
        out.measure(name, v, r.tolerance);
    }
}

fn run_solve(field: &FieldConfig, grid: &GridConfig, solver: &SolverConfig) -> Result<Outcome, CliError> {
    let sol = solve(field, grid, solver)?;
    let mut out = Outcome::default();
    let stats = sol.stats();
    let last = stats.residuals.last().copied().unwrap_or(0.0);
    out.measure("iterations", stats.iterations as f64, 0.0);
    out.measure("final_residual", last, 0.0);
    let norm_err = sol.normalization_error()?;
    out.measure("normalization_error", norm_err, 0.0);
    out.measure("min_jacobian", sol.min_jacobian(), 0.0);
    let tr = sol.trace_report();
    out.measure("trace_consistency", tr.consistency, 0.0);
    out.measure("trace_radial_defect", tr.radial_defect, 0.0);
    out.contract(
        "three-point normalisation",
        norm_err <= 10.0 * solver.tol,
        format!("max |F(p) − p| over p ∈ {{1, i, −1}} = {norm_err:.3e}"),
    );
    out.contract(
        "orientation preserved",
        sol.min_jacobian() > 0.0,
        format!("min Jacobian {:.3e}", sol.min_jacobian()),
    );
    let mut table = Table::new("trace", &["theta", "re_f", "im_f"]);
    let trace = sol.trace();
    for (k, v) in trace.samples().iter().enumerate() {
        table.push(vec![trace.angle(k).into(), v.re.into(), v.im.into()]);
    }
    out.tables.push(table);
    Ok(out)
}

fn run_experiment(spec: &ExperimentSpec, seed: u64) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    match &spec.experiment {
        Experiment::Solve { field, grid, solver } => return run_solve(field, grid, solver),
        Experiment::Pnorm { field, p, expect } => {
            let r = p_norm(&build_field(field)?, *p)?;
            pnorm_measure(&mut out, "p_norm", &r);
            out.measure("shells", r.shells.len() as f64, 0.0);
            match (expect, r.value) {
                (Some(_), Some(v)) => out.expect("p_norm", v, r.tolerance, expect),
                (Some(e), None) => out.contract(
                    "p_norm matches expectation",
                    false,
                    format!("integral is {:?}, expected {}", r.status, e.value),
                ),
                (None, _) => {}
            }
            out.contract("status", true, format!("{:?}", r.status));
        }
        Experiment::Twb {
            field,
            theta,
            r,
            inequality_samples,
        } => {
            let res = twb_integral(&build_field(field)?, polar(*theta), *r)?;
            pnorm_measure(&mut out, "twb_integral", &res);
            out.contract("status", true, format!("{:?}", res.status));
            if *inequality_samples > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut failures = 0usize;
                for _ in 0..*inequality_samples {
                    let z = Point::from_polar(rng.random::<f64>().sqrt(), rng.random_range(0.0..2.0 * PI));
                    let zeta0 = polar(rng.random_range(0.0..2.0 * PI));
                    if z.norm() < 1.0 && !check_eq5(z, zeta0) {
                        failures += 1;
                    }
                }
                out.measure("inequality_failures", failures as f64, 0.0);
                out.contract(
                    "pointwise weight inequality",
                    failures == 0,
                    format!("{failures} failures in {inequality_samples} samples (seed {seed})"),
                );
            }
        }
        Experiment::Module {
            field,
            annulus,
            resolution,
            expect,
        } => {
            let a = AnnulusSpec::new(Point::new(annulus.center[0], annulus.center[1]), annulus.r_inner, annulus.r_outer)?;
            let est = mod_image_annulus_auto(&build_field(field)?, &a, &(*resolution).into())?;
            out.measure("module", est.computed, est.tolerance);
            out.measure("lower_bound", est.lower_bound, 0.0);
            out.measure("upper_bound", est.upper_bound, 0.0);
            out.contract(
                "sandwich",
                est.sandwiched(),
                format!(
                    "{:.6} ≤ {:.6} ≤ {:.6} (tol {:.1e})",
                    est.lower_bound, est.computed, est.upper_bound, est.tolerance
                ),
            );
            out.expect("module", est.computed, est.tolerance, expect);
        }
        Experiment::ReducedModule {
            curve,
            w0,
            cross_check,
            expect,
        } => {
            let c = curve.build().map_err(|message| CliError::Config {
                field: "curve".into(),
                message,
                line: None,
                column: None,
            })?;
            let w0 = Point::new(w0[0], w0[1]);
            let m = reduced_module(&c, w0)?;
            out.measure("reduced_module", m.value, m.tolerance);
            out.expect("reduced_module", m.value, m.tolerance, expect);
            if *cross_check {
                let x = reduced_module_extrapolated(&c, w0)?;
                out.measure("extrapolated", x.value, x.tolerance);
                let diff = (x.value - m.value).abs();
                out.contract(
                    "robin solve agrees with extrapolation",
                    diff <= REDUCED_CROSS_TOL,
                    format!("|diff| = {diff:.3e}"),
                );
            }
        }
        Experiment::Derivative {
            map,
            thetas,
            route,
            h,
            sweep,
        } => {
            let (cm, sol) = circle_map(map)?;
            let h = h.unwrap_or_else(|| min_gap(thetas).map_or(DEFAULT_FD_STEP, |g| (0.25 * g).min(DEFAULT_FD_STEP)));
            let settings: SweepSettings = (*sweep).into();
            let rhos = settings.rhos();
            let mut table = Table::new(
                "derivatives",
                &["theta", "fd", "fd_tolerance", "modules", "modules_tolerance"],
            );
            let rows: Vec<(f64, Eval, Eval)> = thetas
                .par_iter()
                .map(|&theta| {
                    let fd = if *route != DerivativeRoute::Modules {
                        derivative_fd(&cm, theta, h).map(|d| (d.magnitude, d.tolerance)).map_err(|e| e.to_string())
                    } else {
                        Err("not requested".into())
                    };
                    let md = match (&sol, route) {
                        (Some(sol), DerivativeRoute::Modules | DerivativeRoute::Both) => {
                            derivative_via_modules_with(sol, polar(theta), settings.r, &rhos, &settings.resolution)
                                .map(|(d, _)| (d.magnitude, d.tolerance))
                                .map_err(|e| e.to_string())
                        }
                        _ => Err("not requested".into()),
                    };
                    (theta, fd, md)
                })
                .collect();
            for (theta, fd, md) in rows {
                let cell = |r: &Result<(f64, f64), String>| match r {
                    Ok((v, t)) => (Cell::Num(*v), Cell::Num(*t)),
                    Err(_) => (Cell::Num(f64::NAN), Cell::Num(f64::NAN)),
                };
                let (a, b) = cell(&fd);
                let (c, d) = cell(&md);
                table.push(vec![theta.into(), a, b, c, d]);
                for (label, r) in [("fd", &fd), ("modules", &md)] {
                    match r {
                        Ok((v, _)) => out.contract(format!("{label} positive at θ = {theta}"), *v > 0.0, format!("{v}")),
                        Err(e) if e != "not requested" => {
                            out.contract(format!("{label} evaluated at θ = {theta}"), false, e.clone())
                        }
                        Err(_) => {}
                    }
                }
            }
            out.tables.push(table);
        }
        Experiment::Claim2 {
            field,
            theta,
            rho1,
            ratio,
            resolution,
        } => {
            let field = build_field(field)?;
            let res = (*resolution).into();
            let mut table = Table::new("claim2", &["rho1", "rho2", "gap", "bound", "tolerance"]);
            let gaps: Vec<_> = rho1
                .par_iter()
                .map(|&r1| claim2_gap(&field, polar(*theta), r1 / ratio, r1, &res))
                .collect();
            for g in gaps {
                let g = g?;
                table.push(vec![
                    g.rho_outer.into(),
                    g.rho_inner.into(),
                    g.gap.into(),
                    g.bound.into(),
                    g.tolerance.into(),
                ]);
                out.contract(
                    format!("|gap| ≤ bound at ρ₁ = {}", g.rho_outer),
                    g.holds(),
                    format!("|{:.3e}| vs {:.3e} (tol {:.1e})", g.gap, g.bound, g.tolerance),
                );
            }
            out.tables.push(table);
        }
        Experiment::Claim3 {
            field,
            grid,
            solver,
            n_points,
            sweep,
            rel_tol,
        } => {
            let sol = solve(field, grid, solver)?;
            let settings: SweepSettings = (*sweep).into();
            let rhos = settings.rhos();
            let thetas: Vec<f64> = (0..*n_points).map(|k| PI / 4.0 + 2.0 * PI * k as f64 / *n_points as f64).collect();
            let evals: Vec<_> = thetas
                .par_iter()
                .map(|&theta| {
                    let fd = derivative_fd(sol.trace(), theta, DEFAULT_FD_STEP);
                    let md = derivative_via_modules_with(&sol, polar(theta), settings.r, &rhos, &settings.resolution);
                    (theta, fd, md)
                })
                .collect();
            let mut table = Table::new(
                "derivatives",
                &["theta", "fd", "fd_tolerance", "modules", "modules_tolerance", "relative_difference"],
            );
            let mut defects = Table::new("module_defect", &["theta", "rho", "defect"]);
            for (theta, fd, md) in evals {
                match (fd, md) {
                    (Ok(fd), Ok((m, defect))) => {
                        let rel = (m.magnitude - fd.magnitude).abs() / fd.magnitude;
                        table.push(vec![
                            theta.into(),
                            fd.magnitude.into(),
                            fd.tolerance.into(),
                            m.magnitude.into(),
                            m.tolerance.into(),
                            rel.into(),
                        ]);
                        for (rho, v) in defect.rhos.iter().zip(&defect.values) {
                            defects.push(vec![theta.into(), (*rho).into(), (*v).into()]);
                        }
                        out.contract(
                            format!("cross-oracle at θ = {theta:.4}"),
                            rel <= *rel_tol,
                            format!("fd {:.6}, modules {:.6}, rel {rel:.2e}", fd.magnitude, m.magnitude),
                        );
                    }
                    (fd, md) => {
                        let msg = [fd.err().map(|e| e.to_string()), md.err().map(|e| e.to_string())]
                            .into_iter()
                            .flatten()
                            .collect::<Vec<_>>()
                            .join("; ");
                        out.contract(format!("cross-oracle at θ = {theta:.4}"), false, msg);
                    }
                }
            }
            out.tables.push(table);
            out.tables.push(defects);
        }
        Experiment::Continuity {
            map,
            n_zeta,
            route,
            sweep,
            expect_refinement,
            jump,
        } => {
            let (cm, sol) = circle_map(map)?;
            let settings: SweepSettings = (*sweep).into();
            let mut oscillations = Vec::new();
            for &n in n_zeta {
                let s = match (route, &sol) {
                    (DerivativeRoute::Modules, Some(sol)) => derivative_oscillation(sol, n, &settings)?,
                    _ => derivative_oscillation_fd(&cm, n)?,
                };
                let mut table = Table::new(
                    &format!("ln_derivative_n{n}"),
                    &["theta", "ln_abs_derivative", "method", "tolerance"],
                );
                for smp in &s.samples {
                    match smp.ln_derivative {
                        Some(v) => table.push(vec![
                            smp.theta.into(),
                            v.into(),
                            smp.method.to_string().into(),
                            smp.tolerance.into(),
                        ]),
                        None => table.push(vec![smp.theta.into(), f64::NAN.into(), "failed".into(), f64::NAN.into()]),
                    }
                }
                let tol = s.samples.iter().map(|x| x.tolerance).filter(|t| t.is_finite()).fold(0.0, f64::max);
                out.measure(format!("max_oscillation_n{n}"), s.max_oscillation, 2.0 * tol);
                out.contract(
                    format!("all points evaluated (n = {n})"),
                    s.failures == 0,
                    format!("{} failures", s.failures),
                );
                if let Some(j) = jump {
                    match s.jump_across(j.theta) {
                        Some(v) => {
                            let err = (v - j.expected).abs();
                            out.measure(format!("jump_n{n}"), v, tol);
                            out.contract(
                                format!("jump across θ = {} (n = {n})", j.theta),
                                err <= j.rel_tol * j.expected.abs(),
                                format!("{v:.5} vs {:.5}", j.expected),
                            );
                        }
                        None => out.contract(format!("jump across θ = {} (n = {n})", j.theta), false, "bracketing sample failed"),
                    }
                }
                oscillations.push((n, s.max_oscillation));
                out.tables.push(table);
            }
            if *expect_refinement {
                let ok = oscillations.windows(2).all(|w| w[1].1 <= w[0].1);
                out.contract("oscillation non-increasing under refinement", ok, format!("{oscillations:?}"));
            }
        }
        Experiment::Symmetry {
            map,
            ts,
            expect_decreasing,
            ratio,
        } => {
            let (cm, _) = circle_map(map)?;
            let mut table = Table::new("symmetry", &["t", "sup_deviation", "quasisymmetry_lower_bound"]);
            let mut devs = Vec::new();
            for &t in ts {
                let d = symmetry_deviation(&cm, t)?;
                let q = quasisymmetry_constant(&cm, &[t])?;
                table.push(vec![t.into(), d.into(), q.into()]);
                devs.push(d);
            }
            out.measure("quasisymmetry_lower_bound", quasisymmetry_constant(&cm, ts)?, 0.0);
            if *expect_decreasing {
                let ok = devs.windows(2).all(|w| w[1] < w[0]);
                out.contract("sup deviation decreases along t", ok, format!("{devs:?}"));
            }
            if let Some(r) = ratio {
                let v = symmetry_ratio(&cm, r.theta, r.t)?;
                out.measure("ratio", v, 0.0);
                out.contract(
                    format!("ratio at θ = {}, t = {}", r.theta, r.t),
                    (v - r.expected).abs() <= r.rel_tol * r.expected.abs(),
                    format!("{v:.5} vs {}", r.expected),
                );
            }
            out.tables.push(table);
        }
    }
    Ok(out)
}

/// Runs every experiment of a validated configuration; individual failures
/// are recorded in the report and do not abort the batch.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport, CliError> {
    config.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<ExperimentResult> = pool.install(|| {
        config
            .experiments
            .par_iter()
            .enumerate()
            .map(|(i, spec)| {
                info!("running {} ({})", spec.name, spec.experiment.kind());
                let t = Instant::now();
                let outcome = run_experiment(spec, opts.seed.wrapping_add(i as u64));
                let wall = t.elapsed().as_secs_f64();
                match outcome {
                    Ok(o) => {
                        let passed = o.contracts.iter().all(|c| c.passed);
                        info!("{}: {} in {wall:.2}s", spec.name, if passed { "pass" } else { "fail" });
                        ExperimentResult {
                            name: spec.name.clone(),
                            experiment: spec.experiment.kind().into(),
                            status: if passed { Status::Pass } else { Status::Fail },
                            measurements: o.measurements,
                            contracts: o.contracts,
                            tables: o.tables,
                            error: None,
                            wall_clock_s: wall,
                        }
                    }
                    Err(e) => {
                        warn!("{}: {e}", spec.name);
                        ExperimentResult {
                            name: spec.name.clone(),
                            experiment: spec.experiment.kind().into(),
                            status: Status::Error,
                            measurements: Vec::new(),
                            contracts: Vec::new(),
                            tables: Vec::new(),
                            error: Some(e.to_string()),
                            wall_clock_s: wall,
                        }
                    }
                }
            })
            .collect()
    });
    let passed = results.iter().all(|r| r.status == Status::Pass);
    Ok(ExperimentReport {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        seed: opts.seed,
        jobs: opts.jobs.max(1),
        results,
        passed,
        wall_clock_s: start.elapsed().as_secs_f64(),
        notes: Vec::new(),
    })
}
