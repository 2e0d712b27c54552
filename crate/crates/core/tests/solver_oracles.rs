use qcmod::solver::{solve_extended, QcSolution};
use qcmod::{BeltramiField, CartesianGrid, Point};

fn radial_closed_form(k: f64, rho: Option<f64>, z: Point) -> Point {
    let big_k = (1.0 + k) / (1.0 - k);
    let r = z.norm();
    if r >= 1.0 {
        z
    } else if let Some(rho) = rho.filter(|&rho| r < rho) {
        z * rho.powf(big_k - 1.0)
    } else {
        z * r.powf(big_k - 1.0)
    }
}

fn max_error(sol: &QcSolution, oracle: impl Fn(Point) -> Point) -> f64 {
    let g = sol.grid();
    g.nodes()
        .zip(sol.samples().values())
        .map(|(z, w)| (oracle(z) - w).norm())
        .fold(0.0, f64::max)
}

#[test]
fn radial_stretch_matches_closed_form() {
    let grid = CartesianGrid::new(2.0, 512).unwrap();
    let field = BeltramiField::radial_stretch(1.0 / 3.0).unwrap();
    let sol = solve_extended(&field, &grid, 1e-8, 200).unwrap();
    let err = max_error(&sol, |z| radial_closed_form(1.0 / 3.0, None, z));
    eprintln!("radial stretch max error {err:.3e}, iterations {}", sol.stats().iterations);
    eprintln!("trace report {:?}", sol.trace_report());
    assert!(err <= 1e-2, "max node error {err}");
    assert!(sol.normalization_error().unwrap() <= 10.0 * 1e-8);

    // the circle |z| = ρ goes to the circle of radius ρ^K
    for rho in [0.3, 0.5, 0.8] {
        for j in 0..16 {
            let z = Point::from_polar(rho, 0.4 * j as f64);
            let w = sol.eval(z).unwrap();
            assert!((w.norm() - rho * rho).abs() < 1e-2, "ρ = {rho}: |F| = {}", w.norm());
        }
    }
    // trace is the identity
    let trace = sol.trace();
    for j in 0..32 {
        let t = 0.2 * j as f64;
        assert!((trace.eval(t) - Point::from_polar(1.0, t)).norm() < 1e-2);
    }
}

#[test]
fn radial_stretch_ring_matches_glued_closed_form() {
    let grid = CartesianGrid::new(2.0, 512).unwrap();
    let field = BeltramiField::radial_stretch_ring(1.0 / 3.0, 0.5).unwrap();
    let sol = solve_extended(&field, &grid, 1e-8, 200).unwrap();
    let err = max_error(&sol, |z| radial_closed_form(1.0 / 3.0, Some(0.5), z));
    eprintln!("ring max error {err:.3e}");
    assert!(err <= 1e-2, "max node error {err}");
}

#[test]
fn residuals_contract_geometrically() {
    let grid = CartesianGrid::new(2.0, 256).unwrap();
    for field in [
        BeltramiField::radial_stretch(1.0 / 3.0).unwrap(),
        BeltramiField::power(0.3, 2.0).unwrap(),
        BeltramiField::constant(0.2).unwrap(),
    ] {
        let sol = solve_extended(&field, &grid, 1e-8, 200).unwrap();
        let r = &sol.stats().residuals;
        let k = field.ess_sup_bound();
        for w in r.windows(2).skip(3) {
            assert!(w[1] <= (k + 0.1) * w[0], "{field}: residual ratio {} > k + 0.1", w[1] / w[0]);
        }
    }
}

#[test]
fn power_field_solution_diagnostics() {
    let grid = CartesianGrid::new(2.0, 512).unwrap();
    let field = BeltramiField::power(0.3, 2.0).unwrap();
    let sol = solve_extended(&field, &grid, 1e-8, 200).unwrap();
    assert!(sol.normalization_error().unwrap() <= 1e-7);
    assert!(sol.min_jacobian() > 0.0);
    let trace = sol.trace();
    assert_eq!(trace.winding_number(), 1);
    // fixes 1, i, −1
    for (t, w) in [(0.0, Point::new(1.0, 0.0)), (std::f64::consts::FRAC_PI_2, Point::new(0.0, 1.0)), (std::f64::consts::PI, Point::new(-1.0, 0.0))] {
        assert!((trace.eval(t) - w).norm() < 1e-3, "trace at {t}: {}", trace.eval(t));
    }
    let res = sol.conformality_residual();
    eprintln!("power residuals {res:?}, trace {:?}", sol.trace_report());
    assert!(res.exterior <= 10.0 * res.interior.max(1e-12));
}

#[test]
fn orientation_for_shipped_fields() {
    let grid = CartesianGrid::new(2.0, 256).unwrap();
    for field in [
        BeltramiField::zero(),
        BeltramiField::constant(0.2).unwrap(),
        BeltramiField::power(0.3, 2.0).unwrap(),
        BeltramiField::radial_stretch(1.0 / 3.0).unwrap(),
        BeltramiField::radial_stretch_ring(1.0 / 3.0, 0.5).unwrap(),
        BeltramiField::angular_stretch(1.5).unwrap(),
    ] {
        let sol = solve_extended(&field, &grid, 1e-8, 200).unwrap();
        assert!(sol.min_jacobian() > 0.0, "{field}: Jacobian {}", sol.min_jacobian());
    }
}

#[test]
fn export_writes_csv_and_sidecar() {
    let grid = CartesianGrid::new(2.0, 32).unwrap();
    let sol = solve_extended(&BeltramiField::power(0.3, 2.0).unwrap(), &grid, 1e-8, 200).unwrap();
    let dir = tempfile::tempdir().unwrap();
    sol.export(dir.path(), "power").unwrap();
    let csv = std::fs::read_to_string(dir.path().join("power.csv")).unwrap();
    assert_eq!(csv.lines().count(), 32 * 32 + 1);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("power.json")).unwrap()).unwrap();
    assert!(meta["stats"]["iterations"].as_u64().unwrap() > 0);
    assert!(meta.get("normalization").is_some());
}
