//! Cotangent weights on the medial graph, harmonic log-radius velocities
//! `sigma` on the vertices of `G`, their conjugates `eta` on faces, and the
//! rotation rates `alpha` on medial vertices.

use thiserror::Error;

use crate::differentials::{koebe_qd_from_velocity, KoebeQd};
use crate::linalg::{null_space, solve, DMat};
use crate::mesh::{
    integrate_dual_one_form, integrate_primal_one_form, MedialComplex, MedialVertexKind, MeshError,
    TriangleComplex,
};
use crate::packing::CirclePacking;
use crate::scalar::{max_of, relative_max, Real, C};

/// Relative residual accepted by the harmonicity pre-checks.
pub const HARMONIC_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarmonicError {
    #[error("degenerate triangle {0} in the medial triangulation")]
    DegenerateTriangle(usize),
    #[error("function is not harmonic (residual {0:e})")]
    NotHarmonic(f64),
    #[error("rotation rates from the two faces of an edge disagree ({0:e})")]
    FaceMismatch(f64),
    #[error("expected {expected} values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("boundary value system is singular")]
    Singular,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn check_len(expected: usize, got: usize) -> Result<(), HarmonicError> {
    if expected != got {
        return Err(HarmonicError::WrongLength { expected, got });
    }
    Ok(())
}

/// `R_ijk`: radius of the circle through the three tangency points of face `f`,
/// `sqrt(R_u R_v R_s / (R_u + R_v + R_s))`.
pub fn face_radius<T: Real>(p: &CirclePacking<T>, f: usize) -> T {
    let [u, v, s] = p.mesh.face(f);
    let (a, b, c) = (p.radii[u], p.radii[v], p.radii[s]);
    (a * b * c / (a + b + c)).sqrt()
}

pub fn face_radii<T: Real>(p: &CirclePacking<T>) -> Vec<T> {
    (0..p.mesh.face_count())
        .map(|f| face_radius(p, f))
        .collect()
}

fn shared_vertex(a: (usize, usize), b: (usize, usize)) -> usize {
    if a.0 == b.0 || a.0 == b.1 {
        a.0
    } else {
        a.1
    }
}

/// Cotangent weight per edge of `TMG`: zero on diagonals,
/// `R_v/R_ijk + R_ijk/R_v` on medial edges around an interior vertex `v` of `G`
/// and the one-sided `R_ijk/R_v` on medial edges along the boundary.
pub fn cot_weights<T: Real>(p: &CirclePacking<T>, m: &MedialComplex) -> Vec<T> {
    let tmg = m.tmg();
    let g = m.disk();
    let rf = face_radii(p);
    (0..tmg.edge_count())
        .map(|e| {
            if m.is_diagonal(e) {
                return T::zero();
            }
            let (i, j) = tmg.edge(e);
            let v = shared_vertex(g.edge(i), g.edge(j));
            let f = [tmg.left_face(e), tmg.right_face(e)]
                .into_iter()
                .flatten()
                .find(|&f| f < g.face_count())
                .expect("medial edge lies in a face of G");
            let (r, rv) = (rf[f], p.radii[v]);
            if tmg.is_interior_edge(e) {
                rv / r + r / rv
            } else {
                r / rv
            }
        })
        .collect()
}

/// `cot` of the angles opposite each edge of `cx`, summed over its faces.
pub fn realized_cot_weights<T: Real>(
    z: &[C<T>],
    cx: &TriangleComplex,
) -> Result<Vec<T>, HarmonicError> {
    let mut w = vec![T::zero(); cx.edge_count()];
    for (f, &[a, b, c]) in cx.faces().iter().enumerate() {
        for (k, o) in [(a, b), (b, c), (c, a)].into_iter().zip([c, a, b]) {
            let (x, y) = (z[k.0] - z[o], z[k.1] - z[o]);
            let cross = x.re * y.im - x.im * y.re;
            let scale = x.norm() * y.norm();
            if !(cross.abs() > T::epsilon() * scale) {
                return Err(HarmonicError::DegenerateTriangle(f));
            }
            let e = cx.edge_index(k.0, k.1).expect("face edge");
            w[e] += (x.re * y.re + x.im * y.im) / cross;
        }
    }
    Ok(w)
}

/// Weight `(R_left + R_right)/(R_u + R_v)` of each interior edge of `G`.
fn sigma_weights<T: Real>(p: &CirclePacking<T>) -> Vec<Option<T>> {
    let rf = face_radii(p);
    let g = &p.mesh;
    (0..g.edge_count())
        .map(|e| {
            let (l, r) = (g.left_face(e)?, g.right_face(e)?);
            let (u, v) = g.edge(e);
            Some((rf[l] + rf[r]) / (p.radii[u] + p.radii[v]))
        })
        .collect()
}

pub fn sigma_laplacian<T: Real>(p: &CirclePacking<T>) -> DMat<T> {
    let w = sigma_weights(p);
    let g = &p.mesh;
    let mut a = DMat::zeros(0, g.vertex_count());
    for u in g.interior_vertices() {
        let mut row = vec![T::zero(); g.vertex_count()];
        for &v in &g.fans(u)[0].neighbors {
            let wt = w[g.edge_index(u, v).unwrap()].expect("interior edge");
            row[v] += wt;
            row[u] -= wt;
        }
        a.push_row(&row);
    }
    a
}

/// Max over interior vertices of `|sum w (sigma_v - sigma_u)| / sum w |sigma_v - sigma_u|`,
/// with the denominators floored by `relative_max`.
pub fn check_sigma_harmonic<T: Real>(
    sigma: &[T],
    p: &CirclePacking<T>,
) -> Result<T, HarmonicError> {
    check_len(p.mesh.vertex_count(), sigma.len())?;
    let w = sigma_weights(p);
    let g = &p.mesh;
    let mut sums = Vec::new();
    for u in g.interior_vertices() {
        let (mut s, mut n) = (T::zero(), T::zero());
        for &v in &g.fans(u)[0].neighbors {
            let t = w[g.edge_index(u, v).unwrap()].unwrap() * (sigma[v] - sigma[u]);
            s += t;
            n += t.abs();
        }
        sums.push((s.abs(), n));
    }
    Ok(relative_max(&sums))
}

/// Orthonormal basis of the harmonic `sigma`, one dimension per boundary vertex.
pub fn sigma_harmonic_basis<T: Real>(p: &CirclePacking<T>) -> Vec<Vec<T>> {
    null_space(&sigma_laplacian(p), T::lit(1e-8)).basis
}

/// Harmonic `sigma` with the given values on the boundary vertices in
/// ascending order.
pub fn sigma_dirichlet<T: Real>(
    p: &CirclePacking<T>,
    boundary: &[T],
) -> Result<Vec<T>, HarmonicError> {
    let g = &p.mesh;
    let bverts = g.boundary_vertices();
    check_len(bverts.len(), boundary.len())?;
    let interior = g.interior_vertices();
    let mut sigma = vec![T::zero(); g.vertex_count()];
    for (&v, &x) in bverts.iter().zip(boundary) {
        sigma[v] = x;
    }
    if interior.is_empty() {
        return Ok(sigma);
    }
    let col: std::collections::BTreeMap<usize, usize> =
        interior.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let w = sigma_weights(p);
    let mut a = DMat::zeros(interior.len(), interior.len());
    let mut b = vec![T::zero(); interior.len()];
    for (r, &u) in interior.iter().enumerate() {
        for &v in &g.fans(u)[0].neighbors {
            let wt = w[g.edge_index(u, v).unwrap()].unwrap();
            a[(r, r)] -= wt;
            match col.get(&v) {
                Some(&c) => a[(r, c)] += wt,
                None => b[r] -= wt * sigma[v],
            }
        }
    }
    let x = solve(&a, &b).map_err(|_| HarmonicError::Singular)?;
    for (&u, xv) in interior.iter().zip(x) {
        sigma[u] = xv;
    }
    Ok(sigma)
}

/// Harmonic conjugate of `sigma` on the faces of `G` with the closedness
/// residual of its defining dual form relative to the largest jump.
#[derive(Debug, Clone)]
pub struct Conjugate<T> {
    pub eta: Vec<T>,
    pub residual: T,
}

/// `eta` with `eta_left - eta_right = (R_left + R_right)/(R_u + R_v) (sigma_v - sigma_u)`
/// across each interior edge `(u, v)` and `eta = 0` on face 0.
pub fn harmonic_conjugate<T: Real>(
    sigma: &[T],
    p: &CirclePacking<T>,
) -> Result<Conjugate<T>, HarmonicError> {
    check_len(p.mesh.vertex_count(), sigma.len())?;
    let w = sigma_weights(p);
    let g = &p.mesh;
    let jumps: Vec<T> = (0..g.edge_count())
        .map(|e| {
            let (u, v) = g.edge(e);
            w[e].map_or(T::zero(), |wt| wt * (sigma[v] - sigma[u]))
        })
        .collect();
    let int = integrate_dual_one_form(g, &jumps)?;
    let scale = max_of(jumps.iter().map(|x| x.abs())).max(max_of(sigma.iter().map(|x| x.abs())));
    let residual = if scale > T::zero() {
        int.max_cycle_residual / scale
    } else {
        T::zero()
    };
    if !(residual <= T::lit(HARMONIC_TOL)) {
        return Err(HarmonicError::NotHarmonic(residual.to_f64_lossy()));
    }
    Ok(Conjugate {
        eta: int.values,
        residual,
    })
}

/// `alpha_i = eta_uvs - R_ijk/(R_u + R_v) (sigma_v - sigma_u)` on every medial
/// vertex, read from the face left of `u -> v`; on interior edges it is
/// compared with the value from the other face.
pub fn sigma_to_alpha<T: Real>(
    sigma: &[T],
    eta: &[T],
    p: &CirclePacking<T>,
) -> Result<Vec<T>, HarmonicError> {
    check_len(p.mesh.vertex_count(), sigma.len())?;
    check_len(p.mesh.face_count(), eta.len())?;
    let g = &p.mesh;
    let rf = face_radii(p);
    let mut alpha = Vec::with_capacity(g.edge_count());
    let mut mismatch = T::zero();
    let mut scale = T::zero();
    for e in 0..g.edge_count() {
        let (u, v) = g.edge(e);
        let s = p.radii[u] + p.radii[v];
        let from = |f: usize, a: usize, b: usize| eta[f] - rf[f] / s * (sigma[b] - sigma[a]);
        let val = match (g.left_face(e), g.right_face(e)) {
            (Some(l), r) => {
                let x = from(l, u, v);
                if let Some(r) = r {
                    mismatch = mismatch.max((x - from(r, v, u)).abs());
                }
                x
            }
            (None, Some(r)) => from(r, v, u),
            (None, None) => unreachable!("edge without faces"),
        };
        scale = scale.max(val.abs()).max(sigma[u].abs());
        alpha.push(val);
    }
    let rel = if scale > T::zero() {
        mismatch / scale
    } else {
        mismatch
    };
    if !(rel <= T::lit(HARMONIC_TOL)) {
        return Err(HarmonicError::FaceMismatch(rel.to_f64_lossy()));
    }
    Ok(alpha)
}

/// Cotangent-Laplacian residual of `alpha` at the closed medial vertices,
/// relative to `sum w |alpha_j - alpha_i|` floored by `relative_max`.
pub fn check_alpha_harmonic<T: Real>(
    alpha: &[T],
    p: &CirclePacking<T>,
    m: &MedialComplex,
) -> Result<T, HarmonicError> {
    let tmg = m.tmg();
    check_len(tmg.vertex_count(), alpha.len())?;
    let w = cot_weights(p, m);
    let mut sums = Vec::new();
    for i in 0..tmg.vertex_count() {
        if m.vertex_kind(i) != MedialVertexKind::Closed {
            continue;
        }
        let (mut s, mut n) = (T::zero(), T::zero());
        for &j in &tmg.fans(i)[0].neighbors {
            let t = w[tmg.edge_index(i, j).unwrap()] * (alpha[j] - alpha[i]);
            s += t;
            n += t.abs();
        }
        sums.push((s.abs(), n));
    }
    Ok(relative_max(&sums))
}

/// Infinitesimal packing deformation with `R_dot = sigma R`.
#[derive(Debug, Clone)]
pub struct PackingDeformation<T> {
    pub cdot: Vec<C<T>>,
    pub rdot: Vec<T>,
    pub alpha: Vec<T>,
    pub eta: Vec<T>,
    /// Face closedness residual of the center velocities relative to the largest edge term.
    pub closedness: T,
}

/// Integrates `cdot_v - cdot_u = ((sigma_u R_u + sigma_v R_v)/(R_u + R_v) + i alpha) (c_v - c_u)`
/// from `cdot = 0` at vertex 0.
pub fn deformation_from_sigma<T: Real>(
    sigma: &[T],
    p: &CirclePacking<T>,
) -> Result<PackingDeformation<T>, HarmonicError> {
    let res = check_sigma_harmonic(sigma, p)?;
    if !(res <= T::lit(HARMONIC_TOL)) {
        return Err(HarmonicError::NotHarmonic(res.to_f64_lossy()));
    }
    let eta = harmonic_conjugate(sigma, p)?.eta;
    let alpha = sigma_to_alpha(sigma, &eta, p)?;
    let g = &p.mesh;
    let terms: Vec<C<T>> = (0..g.edge_count())
        .map(|e| {
            let (u, v) = g.edge(e);
            let (ru, rv) = (p.radii[u], p.radii[v]);
            let s = (sigma[u] * ru + sigma[v] * rv) / (ru + rv);
            C::new(s, alpha[e]) * (p.centers[v] - p.centers[u])
        })
        .collect();
    let int = integrate_primal_one_form(g.complex(), &terms)?;
    let scale = max_of(terms.iter().map(|t| t.norm()));
    let closedness = if scale > T::zero() {
        int.max_cycle_residual / scale
    } else {
        T::zero()
    };
    if !(closedness <= T::lit(HARMONIC_TOL)) {
        return Err(HarmonicError::NotHarmonic(closedness.to_f64_lossy()));
    }
    let rdot = sigma.iter().zip(&p.radii).map(|(&s, &r)| s * r).collect();
    Ok(PackingDeformation {
        cdot: int.values,
        rdot,
        alpha,
        eta,
        closedness,
    })
}

/// Derivative of `z = c_u + R_u (c_v - c_u)/(R_u + R_v)` on every edge.
pub fn tangency_velocity<T: Real>(p: &CirclePacking<T>, cdot: &[C<T>], rdot: &[T]) -> Vec<C<T>> {
    p.mesh
        .edges()
        .iter()
        .map(|&(u, v)| {
            let d = p.centers[v] - p.centers[u];
            let dd = cdot[v] - cdot[u];
            let (ru, s) = (p.radii[u], p.radii[u] + p.radii[v]);
            let sd = rdot[u] + rdot[v];
            cdot[u] + d * (rdot[u] / s) + dd * (ru / s) - d * (ru * sd / (s * s))
        })
        .collect()
}

/// Koebe-type differential of the deformation generated by a harmonic `sigma`.
pub fn sigma_to_koebe_qd<T: Real>(
    sigma: &[T],
    p: &CirclePacking<T>,
) -> Result<(KoebeQd<T>, T), HarmonicError> {
    let d = deformation_from_sigma(sigma, p)?;
    let zdot = tangency_velocity(p, &d.cdot, &d.rdot);
    Ok(koebe_qd_from_velocity(&p.mesh, &p.tangency_points(), &zdot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::differentials::{check_koebe_qd, koebe_qd_basis};
    use crate::linalg::rank;
    use crate::mesh::hex_disk;
    use crate::packing::{solve_packing, SolveOptions};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn packing(n: usize, b: &[f64]) -> CirclePacking<f64> {
        solve_packing(Arc::new(hex_disk(n).unwrap()), b, SolveOptions::default())
            .unwrap()
            .0
    }

    const B12: [f64; 12] = [1.0, 1.3, 0.8, 1.0, 1.1, 0.9, 1.0, 1.2, 1.0, 0.7, 1.0, 1.0];

    #[test]
    fn flower_weights() {
        let p = packing(1, &[1.0; 6]);
        let m = MedialComplex::new(p.mesh.clone());
        let w = cot_weights(&p, &m);
        let r = 1.0 / 3f64.sqrt();
        assert!((face_radius(&p, 0) - r).abs() < 1e-15);
        for e in 0..m.tmg().edge_count() {
            if m.is_diagonal(e) {
                assert_eq!(w[e], 0.0);
            } else if m.tmg().is_interior_edge(e) {
                assert!((w[e] - 4.0 / 3f64.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weights_match_realized_angles() {
        let p = packing(2, &B12);
        let m = MedialComplex::new(p.mesh.clone());
        let w = cot_weights(&p, &m);
        let real = realized_cot_weights(&p.tangency_points(), m.tmg()).unwrap();
        for (a, b) in w.iter().zip(&real) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn face_radius_is_circumradius() {
        let p = packing(2, &B12);
        let z = p.tangency_points();
        for f in 0..p.mesh.face_count() {
            let [a, b, c] = p.mesh.face_edges(f);
            let (_, r) = crate::geom::circumcircle(z[a], z[b], z[c]).unwrap();
            assert!((r - face_radius(&p, f)).abs() < 1e-12 * r);
        }
    }

    #[test]
    fn sigma_examples() {
        let p = packing(1, &[1.0; 6]);
        assert_eq!(check_sigma_harmonic(&[1.0; 7], &p).unwrap(), 0.0);
        let alt = [0.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        assert!(check_sigma_harmonic(&alt, &p).unwrap() < 1e-15);
        let bad = [0.3, 1.0, 0.2, 0.1, 0.5, 1.0, 0.0];
        assert!(check_sigma_harmonic(&bad, &p).unwrap() > 0.1);
    }

    #[test]
    fn harmonic_dimension_is_boundary_size() {
        for (n, b) in [(1usize, 6usize), (2, 12)] {
            let p = packing(n, &vec![1.0; b]);
            assert_eq!(sigma_harmonic_basis(&p).len(), b);
        }
    }

    #[test]
    fn constant_sigma_is_scaling() {
        let p = packing(2, &B12);
        let d = deformation_from_sigma(&[1.0; 19], &p).unwrap();
        assert!(d.eta.iter().all(|&x| x.abs() < 1e-14));
        for (cd, c) in d.cdot.iter().zip(&p.centers) {
            assert!((cd - (c - p.centers[0])).norm() < 1e-12);
        }
        let shifted = CirclePacking::new(
            p.mesh.clone(),
            p.centers.iter().map(|c| c - p.centers[0]).collect(),
            p.radii.clone(),
        );
        let zd = tangency_velocity(&shifted, &d.cdot, &d.rdot);
        for (a, b) in zd.iter().zip(shifted.tangency_points()) {
            assert!((a - b).norm() < 1e-12);
        }
        let (l, _) = sigma_to_koebe_qd(&[1.0; 19], &p).unwrap();
        assert!(l.norm() < 1e-10);
    }

    #[test]
    fn translation_velocity() {
        let p = packing(1, &[1.0; 6]);
        let w = C::new(0.4, -1.5);
        let zd = tangency_velocity(&p, &[w; 7], &[0.0; 7]);
        assert!(zd.iter().all(|x| (x - w).norm() < 1e-15));
    }

    #[test]
    fn conjugate_rejects_corruption() {
        let p = packing(2, &B12);
        let mut s = sigma_dirichlet(
            &p,
            &[
                0.3, -0.2, 0.5, 0.1, 0.0, 0.4, -0.3, 0.2, 0.1, 0.6, -0.1, 0.2,
            ],
        )
        .unwrap();
        assert!(harmonic_conjugate(&s, &p).unwrap().residual < 1e-11);
        s[0] += 1e-3;
        assert!(matches!(
            harmonic_conjugate(&s, &p),
            Err(HarmonicError::NotHarmonic(_))
        ));
    }

    #[test]
    fn deformation_is_tangency_preserving() {
        let p = packing(2, &B12);
        let s = sigma_dirichlet(
            &p,
            &[
                0.3, -0.2, 0.5, 0.1, 0.0, 0.4, -0.3, 0.2, 0.1, 0.6, -0.1, 0.2,
            ],
        )
        .unwrap();
        let d = deformation_from_sigma(&s, &p).unwrap();
        assert!(d.closedness < 1e-11);
        let m = MedialComplex::new(p.mesh.clone());
        assert!(check_alpha_harmonic(&d.alpha, &p, &m).unwrap() < 1e-9);
        let defect = |eps: f64| {
            let q = CirclePacking::new(
                p.mesh.clone(),
                p.centers
                    .iter()
                    .zip(&d.cdot)
                    .map(|(c, v)| c + v * eps)
                    .collect(),
                p.radii
                    .iter()
                    .zip(&d.rdot)
                    .map(|(r, v)| r + v * eps)
                    .collect(),
            );
            q.tangency_residual()
        };
        let ratio = defect(1e-3) / defect(5e-4);
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn alpha_harmonic_is_flip_invariant() {
        let p = packing(2, &B12);
        let s = sigma_dirichlet(
            &p,
            &[
                1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.5,
            ],
        )
        .unwrap();
        let d = deformation_from_sigma(&s, &p).unwrap();
        let m = MedialComplex::new(p.mesh.clone());
        let r0 = check_alpha_harmonic(&d.alpha, &p, &m).unwrap();
        let (a, b) = m.diagonals()[2];
        let m2 = m.flip_diagonal(a, b).unwrap();
        assert_eq!(check_alpha_harmonic(&d.alpha, &p, &m2).unwrap(), r0);
    }

    #[test]
    fn sigma_gives_koebe_differentials() {
        let p = packing(2, &B12);
        let z = p.tangency_points();
        let basis = sigma_harmonic_basis(&p);
        let mut images = Vec::new();
        for s in &basis {
            let (l, imag) = sigma_to_koebe_qd(s, &p).unwrap();
            assert!(imag < 1e-8);
            assert!(check_koebe_qd(&l, &p.mesh, &z).unwrap() < 1e-8);
            images.push(l.lambda);
        }
        let k = koebe_qd_basis(&p.mesh, &z, &p.centers, &p.radii)
            .unwrap()
            .len();
        assert_eq!(rank(&DMat::from_rows(&images), 1e-8), k);
        assert_eq!(basis.len(), k + 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn weights_positive_and_symmetric(b in prop::collection::vec(0.5f64..2.0, 12)) {
            let p = packing(2, &b);
            let m = MedialComplex::new(p.mesh.clone());
            let w = cot_weights(&p, &m);
            let real = realized_cot_weights(&p.tangency_points(), m.tmg()).unwrap();
            for e in 0..w.len() {
                if m.is_diagonal(e) {
                    prop_assert_eq!(w[e], 0.0);
                } else {
                    prop_assert!(w[e] > 0.0);
                }
                prop_assert!((w[e] - real[e]).abs() < 1e-9);
            }
        }

        #[test]
        fn dirichlet_solution_is_harmonic(b in prop::collection::vec(-1.0f64..1.0, 12)) {
            let p = packing(2, &B12);
            let s = sigma_dirichlet(&p, &b).unwrap();
            prop_assert!(check_sigma_harmonic(&s, &p).unwrap() < 1e-12);
            let d = deformation_from_sigma(&s, &p).unwrap();
            let m = MedialComplex::new(p.mesh.clone());
            prop_assert!(check_alpha_harmonic(&d.alpha, &p, &m).unwrap() < 1e-9);
        }
    }
}
