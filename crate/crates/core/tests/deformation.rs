//! Finite-difference checks of the log-derivative identities along packing
//! families obtained by perturbing boundary radii.

use std::sync::Arc;

use cpmin_core::differentials::{
    koebe_qd_basis, koebe_qd_from_velocity, koebe_to_general, project_moebius,
    velocity_from_koebe_qd,
};
use cpmin_core::harmonic::{deformation_from_sigma, sigma_dirichlet, sigma_to_koebe_qd};
use cpmin_core::invariants::{extract_vertex_rotation, packing_cross_ratios, pattern_cross_ratios};
use cpmin_core::packing::solve_packing;
use cpmin_core::{hex_disk, CirclePacking, InfMoebius, MedialComplex, SolveOptions, C};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Family {
    p0: CirclePacking<f64>,
    b0: Vec<f64>,
    dlog: Vec<f64>,
}

impl Family {
    fn new(n: usize, seed: u64) -> Self {
        let mesh = Arc::new(hex_disk(n).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nb = mesh.boundary_vertices().len();
        let b0: Vec<f64> = (0..nb).map(|_| rng.gen_range(0.7..1.3)).collect();
        let dlog = (0..nb).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p0 = solve_packing(mesh, &b0, SolveOptions::default()).unwrap().0;
        Self { p0, b0, dlog }
    }

    fn at(&self, t: f64) -> CirclePacking<f64> {
        let b: Vec<f64> = self
            .b0
            .iter()
            .zip(&self.dlog)
            .map(|(r, s)| r * (t * s).exp())
            .collect();
        solve_packing(self.p0.mesh.clone(), &b, SolveOptions::default())
            .unwrap()
            .0
    }

    fn sigma(&self) -> Vec<f64> {
        sigma_dirichlet(&self.p0, &self.dlog).unwrap()
    }
}

fn ratio(e1: f64, e2: f64) -> f64 {
    e1 / e2
}

fn wrap(x: f64) -> f64 {
    x.sin().atan2(x.cos())
}

#[test]
fn cr_dagger_log_derivative_is_lambda() {
    for seed in 0..3 {
        let fam = Family::new(2, seed);
        let (lambda, _) = sigma_to_koebe_qd(&fam.sigma(), &fam.p0).unwrap();
        let lam = lambda.full(&fam.p0.mesh);
        let cr0 = packing_cross_ratios(&fam.p0).unwrap();
        let err = |eps: f64| {
            let cr = packing_cross_ratios(&fam.at(eps)).unwrap();
            fam.p0
                .mesh
                .interior_edges()
                .into_iter()
                .map(|e| {
                    let fd = (cr.values[e].unwrap() / cr0.values[e].unwrap()).ln().re / eps;
                    (fd - lam[e]).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1e-3), err(5e-4));
        assert!(e1 < 1e-2, "seed {seed}: {e1:e}");
        assert!(ratio(e1, e2) >= 1.9, "seed {seed}: {e1:e} {e2:e}");
    }
}

#[test]
fn pattern_log_derivative_is_q() {
    for seed in 0..3 {
        let fam = Family::new(2, seed);
        let (lambda, _) = sigma_to_koebe_qd(&fam.sigma(), &fam.p0).unwrap();
        let z0 = fam.p0.tangency_points();
        let m = MedialComplex::new(fam.p0.mesh.clone());
        let q = koebe_to_general(&lambda, &z0, &m).unwrap().qd.full(&m);
        let cr0 = pattern_cross_ratios(&z0, &m).unwrap();
        let err = |eps: f64| {
            let cr = pattern_cross_ratios(&fam.at(eps).tangency_points(), &m).unwrap();
            m.tmg()
                .interior_edges()
                .into_iter()
                .map(|e| {
                    let fd = (cr.values[e].unwrap() / cr0.values[e].unwrap()).ln().re / eps;
                    (fd - q[e]).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1e-3), err(5e-4));
        assert!(e1 < 1e-2, "seed {seed}: {e1:e}");
        assert!(ratio(e1, e2) >= 1.9, "seed {seed}: {e1:e} {e2:e}");
    }
}

#[test]
fn vertex_rotation_rate_is_half_alpha() {
    let fam = Family::new(2, 7);
    let d = deformation_from_sigma(&fam.sigma(), &fam.p0).unwrap();
    let z0 = fam.p0.tangency_points();
    let m = MedialComplex::new(fam.p0.mesh.clone());
    let err = |eps: f64| {
        let r = extract_vertex_rotation(&z0, &fam.at(eps).tangency_points(), &m, 1e-6).unwrap();
        (1..r.alpha.len())
            .map(|i| {
                let fd = wrap(r.alpha[i] - r.alpha[0]) / eps;
                (fd - (d.alpha[i] - d.alpha[0]) / 2.0).abs()
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    assert!(e1 < 1e-2, "{e1:e}");
    assert!(ratio(e1, e2) >= 1.9, "{e1:e} {e2:e}");
}

#[test]
fn moebius_generators_carry_no_lambda() {
    for n in [1, 2] {
        let fam = Family::new(n, 3);
        let p = &fam.p0;
        let z = p.tangency_points();
        let basis = koebe_qd_basis(&p.mesh, &z, &p.centers, &p.radii).unwrap();
        for g in InfMoebius::<f64>::real_basis() {
            let zdot: Vec<C<f64>> = z.iter().map(|&w| g.velocity_at(w)).collect();
            let (l, _) = koebe_qd_from_velocity(&p.mesh, &z, &zdot);
            assert!(l.norm() <= 1e-10, "{:e}", l.norm());
        }
        for b in &basis {
            let zdot = velocity_from_koebe_qd(b, &p.mesh, &z).unwrap();
            let (g, rest) = project_moebius(&z, &zdot);
            let along: Vec<C<f64>> = z.iter().map(|&w| g.velocity_at(w)).collect();
            assert!(koebe_qd_from_velocity(&p.mesh, &z, &along).0.norm() <= 1e-10);
            let (l, _) = koebe_qd_from_velocity(&p.mesh, &z, &rest);
            let d = l
                .lambda
                .iter()
                .zip(&b.lambda)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(d <= 1e-10, "{d:e}");
        }
    }
}
