use std::time::Instant;

use qcmod::geometry::mod_round_annulus;
use qcmod::modules::{claim2_gap, mod_image_annulus, mod_image_annulus_auto, polar_grid, ModuleResolution};
use qcmod::{AnnulusSpec, BeltramiField, Point};

fn annulus(c: Point, a: f64, b: f64) -> AnnulusSpec {
    AnnulusSpec::new(c, a, b).unwrap()
}

#[test]
fn round_annulus_at_full_resolution() {
    let a = annulus(Point::new(0.0, 0.0), 0.5, 1.0);
    let t = Instant::now();
    let est = mod_image_annulus(&BeltramiField::zero(), &a, &polar_grid(&a, 256, 512).unwrap()).unwrap();
    assert!((est.computed - 2f64.ln()).abs() < 1e-3);
    assert!(t.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn radial_stretch_module_pins_tensor_orientation() {
    let a = annulus(Point::new(0.0, 0.0), 0.25, 1.0);
    let field = BeltramiField::radial_stretch(1.0 / 3.0).unwrap();
    let est = mod_image_annulus(&field, &a, &polar_grid(&a, 256, 512).unwrap()).unwrap();
    let expected = 2.0 * 4f64.ln();
    eprintln!("radial stretch module {} vs {expected}, tol {}", est.computed, est.tolerance);
    assert!((est.computed - expected).abs() / expected < 0.01);
    assert!(est.sandwiched());
}

/// Radial stretch on `ρ₀ < |z| < 1` only; an annulus about 0 straddling both
/// `ρ₀` and the unit circle has module `ln(ρ₀/r₁) + K ln(1/ρ₀) + ln r₂`.
fn ring_oracle(k: f64, rho0: f64, r1: f64, r2: f64) -> f64 {
    let big_k = (1.0 + k) / (1.0 - k);
    (rho0 / r1).ln() + big_k * (1.0 / rho0).ln() + r2.ln()
}

#[test]
fn grid_convergence_on_straddling_ring() {
    let (k, rho0) = (1.0 / 3.0, 0.37);
    let a = annulus(Point::new(0.0, 0.0), 0.2, 1.43);
    let field = BeltramiField::radial_stretch_ring(k, rho0).unwrap();
    let exact = ring_oracle(k, rho0, 0.2, 1.43);
    let mut errors = Vec::new();
    for (nr, na) in [(32, 32), (64, 64), (128, 128)] {
        let est = mod_image_annulus(&field, &a, &polar_grid(&a, nr, na).unwrap()).unwrap();
        errors.push((est.computed - exact).abs());
    }
    // interface cells are split exactly, so the discrete module is exact up to rounding
    for w in errors.windows(2) {
        assert!(w[1] <= (0.5 * w[0]).max(1e-10), "errors {errors:?}");
    }
    let a = annulus(Point::new(0.0, 0.0), 0.25, 1.0);
    let field = BeltramiField::radial_stretch(1.0 / 3.0).unwrap();
    let mut prev = f64::INFINITY;
    for (nr, na) in [(32, 32), (64, 64), (128, 128)] {
        let est = mod_image_annulus(&field, &a, &polar_grid(&a, nr, na).unwrap()).unwrap();
        let err = (est.computed - 2.0 * 4f64.ln()).abs();
        assert!(err <= (0.5 * prev).max(1e-10));
        prev = err;
    }
}

#[test]
fn self_convergence_off_center_straddling() {
    let a = annulus(Point::new(0.5, 0.2), 0.2, 0.8);
    for field in [BeltramiField::radial_stretch(1.0 / 3.0).unwrap(), BeltramiField::constant(0.2).unwrap()] {
        let m: Vec<f64> = [(32, 64), (64, 128), (128, 256), (256, 512)]
            .iter()
            .map(|&(nr, na)| mod_image_annulus(&field, &a, &polar_grid(&a, nr, na).unwrap()).unwrap().computed)
            .collect();
        let d: Vec<f64> = m.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        eprintln!("{field}: modules {m:?} differences {d:?}");
        for w in d.windows(2) {
            assert!(w[1] <= 0.5 * w[0], "{field}: differences {d:?}");
        }
    }
}

#[test]
fn translation_invariance_for_zero_field() {
    let base = annulus(Point::new(0.0, 0.0), 0.1, 0.3);
    let grid = polar_grid(&base, 32, 64).unwrap();
    let m0 = mod_image_annulus(&BeltramiField::zero(), &base, &grid).unwrap().computed;
    for c in [Point::new(1.0, 0.0), Point::new(-0.3, 0.7), Point::new(3.0, 3.0)] {
        let a = annulus(c, 0.1, 0.3);
        let m = mod_image_annulus(&BeltramiField::zero(), &a, &polar_grid(&a, 32, 64).unwrap())
            .unwrap()
            .computed;
        assert!((m - m0).abs() < 1e-6);
    }
    assert!((m0 - mod_round_annulus(&base)).abs() < 1e-9);
}

#[test]
fn power_field_straddling_annulus_is_sandwiched() {
    let field = BeltramiField::power(0.3, 2.0).unwrap();
    let a = annulus(Point::new(1.0, 0.0), 0.05, 0.1);
    let t = Instant::now();
    let est = mod_image_annulus_auto(&field, &a, &ModuleResolution::default()).unwrap();
    eprintln!("power straddling {est:?} in {:.2}s", t.elapsed().as_secs_f64());
    assert!(est.sandwiched());
    let gap = claim2_gap(&field, Point::new(1.0, 0.0), 0.05, 0.1, &ModuleResolution::default()).unwrap();
    eprintln!("claim2 {gap:?}");
    assert!(gap.holds());
}
