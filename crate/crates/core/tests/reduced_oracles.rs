use std::f64::consts::PI;
use std::time::Instant;

use proptest::prelude::*;
use qcmod::reduced::{continuity_probe, module_defect, reduced_module, reduced_module_extrapolated};
use qcmod::solver::solve_extended;
use qcmod::{BeltramiField, CartesianGrid, DiscSpec, JordanCurve, Point, QcError};

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

/// `F(z) = z|z|` inside the unit disc: the radial stretch with `K = 2`.
fn radial_image_disc() -> JordanCurve {
    JordanCurve::new(
        (0..512)
            .map(|k| {
                let z = Point::new(0.5, 0.0) + Point::from_polar(0.3, 2.0 * PI * k as f64 / 512.0);
                z * z.norm()
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn robin_solve_agrees_with_extrapolation_on_battery() {
    let battery = [
        ("circle R=0.7", circle(Point::new(0.0, 0.0), 0.7), Point::new(0.0, 0.0)),
        ("unit circle, off-centre", circle(Point::new(0.0, 0.0), 1.0), Point::new(0.3, 0.2)),
        ("ellipse 1×0.6", ellipse(Point::new(0.0, 0.0), 1.0, 0.6), Point::new(0.0, 0.0)),
        ("ellipse 1×0.6, off-centre", ellipse(Point::new(0.0, 0.0), 1.0, 0.6), Point::new(0.3, 0.1)),
        ("radial-stretch image of D(0.5, 0.3)", radial_image_disc(), Point::new(0.25, 0.0)),
    ];
    for (name, curve, w0) in battery {
        let t = Instant::now();
        let robin = reduced_module(&curve, w0).unwrap();
        let t_robin = t.elapsed().as_secs_f64();
        let extra = reduced_module_extrapolated(&curve, w0).unwrap();
        eprintln!(
            "{name}: robin {:.8} ± {:.1e} ({t_robin:.3}s), extrapolated {:.8} ± {:.1e} ({:.2}s)",
            robin.value,
            robin.tolerance,
            extra.value,
            extra.tolerance,
            t.elapsed().as_secs_f64()
        );
        assert!((robin.value - extra.value).abs() <= 1e-2, "{name}");
    }
    // closed form for the off-centre unit disc
    let r = reduced_module(&circle(Point::new(0.0, 0.0), 1.0), Point::new(0.3, 0.2)).unwrap();
    assert!((r.value - (1.0f64 - 0.13).ln()).abs() < 1e-6);
}

#[test]
fn disc_value_and_translation_invariance() {
    let base = reduced_module(&circle(Point::new(0.0, 0.0), 0.7), Point::new(0.0, 0.0)).unwrap();
    assert!((base.value - (-0.356675)).abs() < 1e-6);
    let shifted = circle(Point::new(0.0, 0.0), 0.7).translated(Point::new(5.0, 5.0));
    let moved = reduced_module(&shifted, Point::new(5.0, 5.0)).unwrap();
    assert!((moved.value - base.value).abs() <= 1e-10, "{} vs {}", moved.value, base.value);
    let e = ellipse(Point::new(0.0, 0.0), 1.0, 0.6);
    let a = reduced_module(&e, Point::new(0.2, 0.1)).unwrap().value;
    let b = reduced_module(&e.translated(Point::new(5.0, 5.0)), Point::new(5.2, 5.1)).unwrap().value;
    assert!((a - b).abs() <= 1e-10);
}

#[test]
fn nested_discs_are_monotone() {
    let w0 = Point::new(0.1, -0.05);
    let mut prev = f64::NEG_INFINITY;
    for r in [0.3, 0.5, 0.8, 1.3] {
        let m = reduced_module(&circle(Point::new(0.0, 0.0), r), w0).unwrap().value;
        assert!(m >= prev);
        prev = m;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn scaling_law(s in 0.5f64..2.0, wx in -0.4f64..0.4, wy in -0.3f64..0.3) {
        let e = ellipse(Point::new(0.0, 0.0), 1.0, 0.6);
        let w0 = Point::new(wx, wy);
        let m = reduced_module(&e, w0).unwrap().value;
        let ms = reduced_module(&e.scaled(s), w0 * s).unwrap().value;
        prop_assert!((ms - m - s.ln()).abs() <= 1e-4);
    }
}

#[test]
fn zero_field_defect_is_log_r() {
    let d = module_defect(&BeltramiField::zero(), Point::new(1.0, 0.0), 0.5, &[0.1, 0.05, 0.025]).unwrap();
    assert!((d.limit - 0.5f64.ln()).abs() < 1e-6, "{d:?}");
}

#[test]
fn power_field_defect_converges() {
    let field = BeltramiField::power(0.3, 2.0).unwrap();
    let t = Instant::now();
    let d = module_defect(&field, Point::new(1.0, 0.0), 0.1, &[0.025, 0.0125, 0.00625]).unwrap();
    eprintln!("power defect {d:?} in {:.2}s", t.elapsed().as_secs_f64());
    assert!(d.limit.is_finite());
    let diffs: Vec<f64> = d.values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(diffs[1] < diffs[0] || diffs[1] <= d.tolerance);
}

/// At ζ = 1 the radial stretch is not conformal (radial slope 2 inside, 1
/// outside), so `Mod(F(A_{1,ρ,r})) + ln ρ` drifts linearly in `ln ρ` and the
/// extrapolation must refuse.
#[test]
fn radial_stretch_defect_does_not_settle() {
    let field = BeltramiField::radial_stretch(1.0 / 3.0).unwrap();
    match module_defect(&field, Point::new(1.0, 0.0), 0.25, &[0.0625, 0.03125, 0.015625]) {
        Err(QcError::Extrapolation { sequence }) => eprintln!("radial stretch sequence {sequence:?}"),
        other => eprintln!("radial stretch defect {other:?}"),
    }
}

#[test]
fn continuity_probe_zero_and_radial_stretch() {
    let grid = CartesianGrid::new(2.0, 256).unwrap();
    let zetas: Vec<Point> = (0..16).map(|k| Point::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / 16.0)).collect();
    let sol = solve_extended(&BeltramiField::zero(), &grid, 1e-8, 200).unwrap();
    let probe = continuity_probe(&sol, &zetas, 0.25).unwrap();
    for s in &probe.samples {
        assert!((s.value - 0.25f64.ln()).abs() < 1e-6, "{s:?}");
    }
    assert!(probe.resolution_floor > 0.0);

    let grid = CartesianGrid::new(2.0, 512).unwrap();
    let sol = solve_extended(&BeltramiField::radial_stretch(1.0 / 3.0).unwrap(), &grid, 1e-8, 200).unwrap();
    let probe = continuity_probe(&sol, &zetas, 0.25).unwrap();
    // closed-form image F(z) = z|z| inside, z outside
    let closed = |z: Point| if z.norm() < 1.0 { z * z.norm() } else { z };
    for s in &probe.samples {
        let curve = JordanCurve::new(
            (0..512).map(|k| closed(s.zeta + Point::from_polar(0.25, 2.0 * PI * k as f64 / 512.0))).collect(),
        )
        .unwrap();
        let exact = reduced_module(&curve, closed(s.zeta)).unwrap().value;
        assert!((s.value - exact).abs() < 1e-2, "{s:?} vs {exact}");
    }
    eprintln!("radial stretch continuity jump {}", probe.max_adjacent_jump());
}
