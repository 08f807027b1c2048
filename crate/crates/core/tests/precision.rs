use std::sync::Arc;

use cpmin_core::harmonic::{cot_weights, sigma_harmonic_basis};
use cpmin_core::invariants::packing_cross_ratios;
use cpmin_core::packing::solve_packing;
use cpmin_core::{hex_disk, CirclePacking32, MedialComplex, MoebiusMap32, SolveOptions, C32};

#[test]
fn flower_in_single_precision() {
    let mesh = Arc::new(hex_disk(1).unwrap());
    let opts = SolveOptions {
        tol: 1e-6f32,
        max_iter: 10_000,
    };
    let (p, report): (CirclePacking32, _) = solve_packing(mesh, &[1.0f32; 6], opts).unwrap();
    assert!(report.max_angle_error < 1e-5);
    assert!((p.radii[0] - 1.0).abs() < 1e-5);
    let cr = packing_cross_ratios(&p).unwrap();
    for (_, w) in cr.interior() {
        assert!((w - C32::new(0.0, 3f32.sqrt())).norm() < 1e-4);
    }
    let m = MedialComplex::new(p.mesh.clone());
    assert!(cot_weights(&p, &m).iter().all(|w| w.is_finite()));
    assert_eq!(sigma_harmonic_basis(&p).len(), 6);
}

#[test]
fn moebius_in_single_precision() {
    let t = MoebiusMap32::new(
        C32::new(1.0, 0.0),
        C32::new(0.5, 0.0),
        C32::new(0.0, 0.25),
        C32::new(1.0, 0.0),
    )
    .unwrap();
    let z = C32::new(0.3, -0.2);
    let back = t.inverse().apply(t.apply(z).unwrap()).unwrap();
    assert!((back - z).norm() < 1e-6);
}
