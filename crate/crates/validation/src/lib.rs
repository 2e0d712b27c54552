//! The acceptance battery for `qcmod`: each criterion is a function returning
//! a pass/fail verdict with a one-line detail.

use std::f64::consts::PI;
use std::time::Instant;

use qcmod::boundary::{
    derivative_fd, derivative_oscillation, derivative_oscillation_fd, derivative_via_modules,
    derivative_via_modules_with, symmetry_deviation, symmetry_ratio, SweepSettings,
};
use qcmod::field::{check_eq5, p_norm};
use qcmod::geometry::mod_round_annulus;
use qcmod::modules::{claim2_gap, mod_image_annulus, mod_image_annulus_auto, polar_grid};
use qcmod::reduced::{image_disc_boundary, module_defect_with, reduced_module, reduced_module_extrapolated};
use qcmod::solver::{solve_extended, QcSolution};
use qcmod::{AnnulusSpec, BeltramiField, CartesianGrid, CircleMap, DiscSpec, JordanCurve, ModuleResolution, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `Ok(detail)` on pass, `Err(detail)` on failure.
pub type Verdict = Result<String, String>;
pub type Criterion = (&'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn annulus(c: Point, a: f64, b: f64) -> AnnulusSpec {
    AnnulusSpec::new(c, a, b).unwrap()
}

fn solve(field: &BeltramiField, n: usize) -> QcSolution {
    solve_extended(field, &CartesianGrid::new(2.0, n).unwrap(), 1e-8, 200).unwrap()
}

fn circle(c: Point, r: f64) -> JordanCurve {
    JordanCurve::new(DiscSpec::new(c, r).unwrap().boundary(512)).unwrap()
}

fn ellipse(c: Point, a: f64, b: f64) -> JordanCurve {
    JordanCurve::new(
        (0..512)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 512.0;
                c + Point::new(a * t.cos(), b * t.sin())
            })
            .collect(),
    )
    .unwrap()
}

fn round_annulus() -> Verdict {
    let a = annulus(Point::new(0.0, 0.0), 0.5, 1.0);
    let t = Instant::now();
    let est = mod_image_annulus(&BeltramiField::zero(), &a, &polar_grid(&a, 256, 512).unwrap()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let err = (est.computed - 2f64.ln()).abs();
    check(err <= 1e-3 && secs < 30.0, format!("Mod = {:.8}, |err| = {err:.2e}, {secs:.2}s", est.computed))
}

fn radial_stretch_solver() -> Verdict {
    let t = Instant::now();
    let k = 1.0 / 3.0;
    let big_k = (1.0 + k) / (1.0 - k);
    let sol = solve(&BeltramiField::radial_stretch(k).unwrap(), 512);
    let secs = t.elapsed().as_secs_f64();
    let err = sol
        .grid()
        .nodes()
        .zip(sol.samples().values())
        .map(|(z, w)| {
            let exact = if z.norm() < 1.0 { z * z.norm().powf(big_k - 1.0) } else { z };
            (exact - w).norm()
        })
        .fold(0.0, f64::max);
    check(err <= 1e-2 && secs < 60.0, format!("max node error {err:.3e}, {secs:.2}s"))
}

fn radial_stretch_module() -> Verdict {
    let a = annulus(Point::new(0.0, 0.0), 0.25, 1.0);
    let est = mod_image_annulus(&BeltramiField::radial_stretch(1.0 / 3.0).unwrap(), &a, &polar_grid(&a, 256, 512).unwrap())
        .unwrap();
    let expected = 2.0 * 4f64.ln();
    let rel = (est.computed - expected).abs() / expected;
    check(rel <= 0.01, format!("Mod = {:.6} vs 2 ln 4 = {expected:.6}, rel {rel:.2e}", est.computed))
}

fn sandwich_suite() -> Verdict {
    let zero = BeltramiField::zero();
    let constant = BeltramiField::constant(0.2).unwrap();
    let power = BeltramiField::power(0.3, 2.0).unwrap();
    let radial = BeltramiField::radial_stretch(1.0 / 3.0).unwrap();
    let p = Point::new;
    let battery: Vec<(&BeltramiField, AnnulusSpec)> = vec![
        (&zero, annulus(p(0.0, 0.0), 0.5, 1.0)),
        (&zero, annulus(p(0.3, -0.2), 0.1, 0.4)),
        (&zero, annulus(p(1.0, 0.0), 0.05, 0.2)),
        (&zero, annulus(p(-2.0, 1.0), 0.3, 0.9)),
        (&zero, annulus(p(0.0, 0.5), 0.2, 1.5)),
        (&constant, annulus(p(0.0, 0.0), 0.2, 0.6)),
        (&constant, annulus(p(0.2, 0.1), 0.1, 0.5)),
        (&constant, annulus(p(-0.3, 0.3), 0.05, 0.3)),
        (&constant, annulus(p(0.0, -0.4), 0.1, 0.2)),
        (&constant, annulus(p(0.1, 0.0), 0.3, 0.8)),
        (&power, annulus(p(1.0, 0.0), 0.05, 0.1)),
        (&power, annulus(p(0.0, 1.0), 0.1, 0.3)),
        (&power, annulus(p(0.0, 0.0), 0.5, 1.0)),
        (&power, annulus(p(0.5, 0.0), 0.1, 0.8)),
        (&power, annulus(p(-0.7, -0.7), 0.05, 0.2)),
        (&radial, annulus(p(0.0, 0.0), 0.25, 1.0)),
        (&radial, annulus(p(0.0, 0.0), 0.5, 2.0)),
        (&radial, annulus(p(0.5, 0.2), 0.2, 0.8)),
        (&radial, annulus(p(1.0, 0.0), 0.1, 0.3)),
        (&radial, annulus(p(0.0, -0.3), 0.1, 0.4)),
    ];
    let res = ModuleResolution::default();
    let mut failures = Vec::new();
    let mut zero_bound_err: f64 = 0.0;
    for (i, (field, a)) in battery.iter().enumerate() {
        let est = mod_image_annulus_auto(field, a, &res).unwrap();
        if !est.sandwiched() {
            failures.push(format!(
                "#{i} {field}: {:.6} ∉ [{:.6}, {:.6}] ± {:.1e}",
                est.computed, est.lower_bound, est.upper_bound, est.tolerance
            ));
        }
        if i < 5 {
            let exact = mod_round_annulus(a);
            zero_bound_err = zero_bound_err.max((est.lower_bound - exact).abs()).max((est.upper_bound - exact).abs());
        }
    }
    check(
        failures.is_empty() && zero_bound_err <= 1e-6,
        format!(
            "{} pairs, {} outside the sandwich, μ = 0 bound error {zero_bound_err:.1e}{}",
            battery.len(),
            failures.len(),
            if failures.is_empty() { String::new() } else { format!(": {}", failures.join("; ")) }
        ),
    )
}

fn superadditivity() -> Verdict {
    let fields = [
        BeltramiField::zero(),
        BeltramiField::constant(0.2).unwrap(),
        BeltramiField::power(0.3, 2.0).unwrap(),
        BeltramiField::radial_stretch(1.0 / 3.0).unwrap(),
        BeltramiField::radial_stretch_ring(1.0 / 3.0, 0.5).unwrap(),
        BeltramiField::angular_stretch(1.5).unwrap(),
    ];
    let triples = [
        (Point::new(0.0, 0.0), 0.3, 0.6, 1.2),
        (Point::new(1.0, 0.0), 0.05, 0.1, 0.2),
        (Point::new(0.3, 0.2), 0.1, 0.25, 0.5),
    ];
    let res = ModuleResolution::default();
    let mut failures = Vec::new();
    let mut worst_zero: f64 = 0.0;
    let mut worst_slack = f64::INFINITY;
    for field in &fields {
        for &(c, a, b, d) in &triples {
            let m = |r1, r2| mod_image_annulus_auto(field, &annulus(c, r1, r2), &res).unwrap();
            let (m1, m2, m3) = (m(a, b), m(b, d), m(a, d));
            let tol = m1.tolerance.max(m2.tolerance).max(m3.tolerance);
            let slack = m3.computed + 2.0 * tol - (m1.computed + m2.computed);
            worst_slack = worst_slack.min(slack);
            if slack < 0.0 {
                failures.push(format!("{field} at {c}: {} + {} > {}", m1.computed, m2.computed, m3.computed));
            }
            if field.ess_sup_bound() == 0.0 {
                worst_zero = worst_zero.max((m1.computed + m2.computed - m3.computed).abs());
            }
        }
    }
    check(
        failures.is_empty() && worst_zero <= 1e-6,
        format!(
            "{} triples, min slack {worst_slack:.2e}, zero-field equality error {worst_zero:.1e}{}",
            fields.len() * triples.len(),
            if failures.is_empty() { String::new() } else { format!(": {}", failures.join("; ")) }
        ),
    )
}

fn pointwise_weight_inequality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 1_000_000;
    let failures = (0..n)
        .filter(|_| {
            let z = Point::from_polar(rng.random::<f64>().sqrt(), 2.0 * PI * rng.random::<f64>());
            let zeta0 = Point::from_polar(1.0, 2.0 * PI * rng.random::<f64>());
            z.norm() < 1.0 && !check_eq5(z, zeta0)
        })
        .count();
    check(failures == 0, format!("{n} samples, {failures} failures"))
}

fn p_norm_closed_form() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for (c, alpha) in [(0.3, 2.0), (0.2, 1.5), (0.5, 3.0)] {
        let r = p_norm(&BeltramiField::power(c, alpha).unwrap(), 1.0).unwrap();
        let exact = c * PI / (alpha - 1.0);
        let rel = r.value.map_or(f64::INFINITY, |v| (v - exact).abs() / exact);
        ok &= rel <= 1e-4;
        lines.push(format!("({c}, {alpha}): rel {rel:.1e}"));
    }
    let constant = p_norm(&BeltramiField::constant(0.2).unwrap(), 1.0).unwrap();
    ok &= constant.divergent();
    lines.push(format!("constant: {:?}", constant.status));
    check(ok, lines.join(", "))
}

fn reduced_module_suite() -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    let o = Point::new(0.0, 0.0);

    let disc_err = [0.3, 0.7, 1.0, 2.5]
        .iter()
        .map(|&r| (reduced_module(&circle(o, r), o).unwrap().value - f64::ln(r)).abs())
        .fold(0.0, f64::max);
    ok &= disc_err <= 1e-6;
    lines.push(format!("disc {disc_err:.1e}"));

    let e = ellipse(o, 1.0, 0.6);
    let w = Point::new(0.2, 0.1);
    let m = reduced_module(&e, w).unwrap().value;
    let shift = Point::new(5.0, -3.0);
    let moved = reduced_module(&e.translated(shift), w + shift).unwrap().value;
    let trans = (moved - m).abs();
    ok &= trans <= 1e-10;
    lines.push(format!("translation {trans:.1e}"));

    let scale = [0.5, 0.8, 1.7, 3.0]
        .iter()
        .map(|&s| (reduced_module(&e.scaled(s), w * s).unwrap().value - m - f64::ln(s)).abs())
        .fold(0.0, f64::max);
    ok &= scale <= 1e-4;
    lines.push(format!("scaling {scale:.1e}"));

    let radial_image = JordanCurve::new(
        (0..512)
            .map(|k| {
                let z = Point::new(0.5, 0.0) + Point::from_polar(0.3, 2.0 * PI * k as f64 / 512.0);
                z * z.norm()
            })
            .collect(),
    )
    .unwrap();
    let battery = [
        (circle(o, 0.7), o),
        (circle(o, 1.0), Point::new(0.3, 0.2)),
        (ellipse(o, 1.0, 0.6), o),
        (ellipse(o, 1.0, 0.6), Point::new(0.3, 0.1)),
        (radial_image, Point::new(0.25, 0.0)),
    ];
    let cross = battery
        .iter()
        .map(|(curve, w0)| {
            (reduced_module(curve, *w0).unwrap().value - reduced_module_extrapolated(curve, *w0).unwrap().value).abs()
        })
        .fold(0.0, f64::max);
    ok &= cross <= 1e-2;
    lines.push(format!("Robin vs extrapolation {cross:.1e} over {}", battery.len()));
    check(ok, lines.join(", "))
}

fn claim2() -> Verdict {
    let field = BeltramiField::power(0.3, 2.0).unwrap();
    let res = ModuleResolution::default();
    let mut ok = true;
    let mut lines = Vec::new();
    for rho1 in [0.2, 0.1, 0.05] {
        let g = claim2_gap(&field, Point::new(1.0, 0.0), rho1 / 2.0, rho1, &res).unwrap();
        // strict: the tolerance is not credited here
        ok &= g.gap.abs() <= g.bound;
        lines.push(format!("ρ₁ = {rho1}: |{:.2e}| ≤ {:.2e}", g.gap, g.bound));
    }
    check(ok, lines.join(", "))
}

fn claim3_cross_oracle() -> Verdict {
    let settings = SweepSettings::default();
    let rhos = settings.rhos();
    let mut ok = true;
    let mut lines = Vec::new();

    let sol = solve(&BeltramiField::power(0.3, 2.0).unwrap(), 512);
    let mut worst: f64 = 0.0;
    for k in 0..8 {
        let theta = PI / 4.0 + 2.0 * PI * k as f64 / 8.0;
        let (m, _) = derivative_via_modules_with(&sol, Point::from_polar(1.0, theta), settings.r, &rhos, &settings.resolution)
            .unwrap();
        let fd = derivative_fd(sol.trace(), theta, 0.02).unwrap();
        worst = worst.max((m.magnitude - fd.magnitude).abs() / fd.magnitude);
    }
    ok &= worst <= 0.05;
    lines.push(format!("power: worst relative difference {worst:.2e} over 8 points"));

    for (name, field) in [
        ("zero", BeltramiField::zero()),
        ("radial stretch", BeltramiField::radial_stretch(1.0 / 3.0).unwrap()),
    ] {
        let sol = solve(&field, 512);
        let zeta = Point::new(1.0, 0.0);
        let fd = derivative_fd(sol.trace(), 0.0, 0.02).unwrap().magnitude;
        ok &= (fd - 1.0).abs() <= 0.01;
        match derivative_via_modules(&sol, zeta, settings.r, &rhos) {
            Ok(m) => {
                ok &= (m.magnitude - 1.0).abs() <= 0.01;
                lines.push(format!("{name}: fd {fd:.5}, modules {:.5}", m.magnitude));
            }
            Err(e) => {
                ok = false;
                // the raw identity value, for the record
                let raw = module_defect_with(&field, zeta, settings.r, &rhos, &ModuleResolution::default())
                    .and_then(|d| {
                        let m = reduced_module(&image_disc_boundary(&sol, zeta, settings.r)?, sol.eval(zeta)?)?;
                        Ok((m.value - d.limit).exp())
                    })
                    .map_or_else(|e| e.to_string(), |v| format!("{v:.5}"));
                lines.push(format!("{name}: fd {fd:.5}, modules refused ({e}); raw exp(m − defect) = {raw}"));
            }
        }
    }
    check(ok, lines.join("; "))
}

fn continuity_signature() -> Verdict {
    let sol = solve(&BeltramiField::power(0.3, 2.0).unwrap(), 512);
    let settings = SweepSettings::default();
    let coarse = derivative_oscillation(&sol, 32, &settings).unwrap();
    let fine = derivative_oscillation(&sol, 64, &settings).unwrap();
    let mut ok = fine.max_oscillation <= coarse.max_oscillation && coarse.failures + fine.failures == 0;
    let mut lines = vec![format!(
        "power oscillation 32: {:.4e}, 64: {:.4e}",
        coarse.max_oscillation, fine.max_oscillation
    )];

    let map = CircleMap::angular_stretch(1.5, 4096).unwrap();
    let ln3 = 3f64.ln();
    let mut jumps = Vec::new();
    for n in [32, 64, 128, 256] {
        let j = derivative_oscillation_fd(&map, n).unwrap().jump_across(0.0).unwrap_or(f64::NAN);
        ok &= (j - ln3).abs() <= 0.1 * ln3;
        jumps.push(format!("{j:.4}"));
    }
    lines.push(format!("angular-stretch jump at 0 [{}] vs ln 3 = {ln3:.4}", jumps.join(", ")));
    check(ok, lines.join("; "))
}

fn symmetry_signature() -> Verdict {
    let sol = solve(&BeltramiField::power(0.3, 2.0).unwrap(), 512);
    let ts = [0.1, 0.05, 0.025, 0.0125];
    let devs: Vec<f64> = ts.iter().map(|&t| symmetry_deviation(sol.trace(), t).unwrap()).collect();
    let mut ok = devs.windows(2).all(|w| w[1] < w[0]);
    let map = CircleMap::angular_stretch(1.5, 4096).unwrap();
    let ratios: Vec<f64> = ts.iter().map(|&t| symmetry_ratio(&map, 0.0, t).unwrap()).collect();
    ok &= (ratios[ts.len() - 1] - 3.0).abs() <= 0.05 * 3.0;
    check(
        ok,
        format!(
            "power deviations {:?}; angular-stretch ratios {:?}",
            devs.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>(),
            ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>()
        ),
    )
}

/// Criteria 1–12 in order; the runtime budget (13) is checked by the runner.
pub fn criteria() -> [Criterion; 12] {
    [
        ("round-annulus module", round_annulus),
        ("radial-stretch solver oracle", radial_stretch_solver),
        ("radial-stretch module oracle", radial_stretch_module),
        ("sandwich suite", sandwich_suite),
        ("superadditivity", superadditivity),
        ("pointwise weight inequality", pointwise_weight_inequality),
        ("p-norm closed form", p_norm_closed_form),
        ("reduced module", reduced_module_suite),
        ("nested-annulus gap bound", claim2),
        ("derivative cross-oracle", claim3_cross_oracle),
        ("continuity signature", continuity_signature),
        ("symmetry signature", symmetry_signature),
    ]
}
