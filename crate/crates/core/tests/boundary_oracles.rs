use std::f64::consts::PI;
use std::time::Instant;

use qcmod::boundary::{
    derivative_fd, derivative_oscillation, derivative_via_modules, derivative_via_modules_with, ring_extremes,
    symmetry_deviation, SweepSettings,
};
use qcmod::reduced::{image_disc_boundary, module_defect_with, reduced_module};
use qcmod::solver::solve_extended;
use qcmod::{BeltramiField, CartesianGrid, ModuleResolution, Point, QcError};

fn grid() -> CartesianGrid {
    CartesianGrid::new(2.0, 512).unwrap()
}

#[test]
fn zero_field_derivatives_are_one() {
    let sol = solve_extended(&BeltramiField::zero(), &CartesianGrid::new(2.0, 256).unwrap(), 1e-8, 200).unwrap();
    let zeta = Point::from_polar(1.0, 0.7);
    let d = derivative_via_modules(&sol, zeta, 0.25, &[0.0625, 0.03125, 0.015625]).unwrap();
    assert!((d.magnitude - 1.0).abs() < 1e-6, "{d:?}");
    let fd = derivative_fd(sol.trace(), 0.7, 0.02).unwrap();
    assert!((fd.magnitude - 1.0).abs() < 1e-6, "{fd:?}");
    let ring = ring_extremes(&sol, zeta, 0.1).unwrap();
    assert!((ring.min - 0.1).abs() < 1e-6 && (ring.max - 0.1).abs() < 1e-6, "{ring:?}");
}

#[test]
fn power_field_cross_oracle() {
    let field = BeltramiField::power(0.3, 2.0).unwrap();
    let sol = solve_extended(&field, &grid(), 1e-8, 200).unwrap();
    let settings = SweepSettings::default();
    let rhos = settings.rhos();
    for k in 0..8 {
        let theta = PI / 4.0 + 2.0 * PI * k as f64 / 8.0;
        let zeta = Point::from_polar(1.0, theta);
        let t = Instant::now();
        let (m, defect) = derivative_via_modules_with(&sol, zeta, settings.r, &rhos, &settings.resolution).unwrap();
        let elapsed = t.elapsed().as_secs_f64();
        let fd = derivative_fd(sol.trace(), theta, 0.02).unwrap();
        let rel = (m.magnitude - fd.magnitude).abs() / fd.magnitude;
        eprintln!(
            "θ = {theta:.3}: modules {:.5} ± {:.1e}, fd {:.5} ± {:.1e}, rel {rel:.2e} ({elapsed:.2}s) defect {:?}",
            m.magnitude, m.tolerance, fd.magnitude, fd.tolerance, defect.values
        );
        assert!(m.magnitude > 0.0);
        assert!(rel <= 0.05);
    }
    // ring ratios at the smallest resolvable radius
    let zeta = Point::from_polar(1.0, PI / 4.0);
    let fd = derivative_fd(sol.trace(), PI / 4.0, 0.02).unwrap().magnitude;
    let rho = sol.resolution_floor();
    let ring = ring_extremes(&sol, zeta, rho).unwrap();
    eprintln!("ring {ring:?}: ratios {} {}", ring.min / (fd * rho), ring.max / (fd * rho));
    assert!((0.9..=1.1).contains(&(ring.min / (fd * rho))));
    assert!((0.9..=1.1).contains(&(ring.max / (fd * rho))));
}

#[test]
fn power_field_oscillation_refines() {
    let field = BeltramiField::power(0.3, 2.0).unwrap();
    let sol = solve_extended(&field, &grid(), 1e-8, 200).unwrap();
    let settings = SweepSettings::default();
    let t = Instant::now();
    let coarse = derivative_oscillation(&sol, 32, &settings).unwrap();
    let fine = derivative_oscillation(&sol, 64, &settings).unwrap();
    eprintln!(
        "oscillation 32: {:.4e}, 64: {:.4e} ({:.1}s), failures {} {}",
        coarse.max_oscillation,
        fine.max_oscillation,
        t.elapsed().as_secs_f64(),
        coarse.failures,
        fine.failures
    );
    assert_eq!(coarse.failures + fine.failures, 0);
    assert!(fine.max_oscillation <= coarse.max_oscillation);
}

#[test]
fn power_trace_symmetry_trend() {
    let field = BeltramiField::power(0.3, 2.0).unwrap();
    let sol = solve_extended(&field, &grid(), 1e-8, 200).unwrap();
    let devs: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&t| symmetry_deviation(sol.trace(), t).unwrap())
        .collect();
    eprintln!("symmetry deviations {devs:?}");
    for w in devs.windows(2) {
        assert!(w[1] < w[0]);
    }
}

/// At ζ = 1 the radial stretch has a divergent TWB integral, so the module
/// route must refuse; the raw identity is printed for the record.
#[test]
fn radial_stretch_module_route_is_refused() {
    let field = BeltramiField::radial_stretch(1.0 / 3.0).unwrap();
    let sol = solve_extended(&field, &grid(), 1e-8, 200).unwrap();
    let zeta = Point::new(1.0, 0.0);
    let settings = SweepSettings::default();
    let err = derivative_via_modules(&sol, zeta, settings.r, &settings.rhos()).unwrap_err();
    assert!(matches!(err, QcError::Precondition(_)), "{err}");
    let fd = derivative_fd(sol.trace(), 0.0, 0.02).unwrap();
    assert!((fd.magnitude - 1.0).abs() < 0.01, "{fd:?}");

    let res = ModuleResolution::default();
    let defect = module_defect_with(&field, zeta, 0.25, &[0.0625, 0.03125, 0.015625], &res).unwrap();
    let m = reduced_module(&image_disc_boundary(&sol, zeta, 0.25).unwrap(), sol.eval(zeta).unwrap()).unwrap();
    eprintln!(
        "radial stretch: exp(m − defect) = {:.5} (m {:.6}, defect {:?})",
        (m.value - defect.limit).exp(),
        m.value,
        defect
    );
}
