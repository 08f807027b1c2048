//! Holomorphic quadratic differentials of Koebe and general type, the
//! deformation fields they integrate to, and the correspondence between them.
//!
//! A Koebe-type differential `lambda` lives on the interior edges of `G`
//! (ordered as [`TriangleComplex::interior_edges`]); a general-type
//! differential `q` lives on the interior edges of `TMG`.

use thiserror::Error;

use crate::invariants::{
    cross_ratio_log_derivative, edge_star, edge_wings, omega_form_from_points, EdgeValues,
    InvariantError,
};
use crate::linalg::{least_squares, null_space, DMat};
use crate::mesh::{
    integrate_dual_one_form, MedialComplex, MedialVertexKind, MeshError, TriangleComplex,
    TriangulatedDisk,
};
use crate::moebius::{fit_inf_moebius, InfMoebius, MoebiusError};
use crate::scalar::{max_of, relative_max, Real, C};

/// Relative threshold for the numerical rank of constraint systems.
pub const RANK_TOL: f64 = 1e-8;

/// Relative closedness residual above which an edge function is rejected.
pub const CLOSEDNESS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error("edge function is not a quadratic differential (cycle residual {0:e})")]
    NotAQuadraticDifferential(f64),
    #[error("velocities from the two sides of an edge disagree ({0:e})")]
    SideMismatch(f64),
    #[error("jump has a non-real eigenvalue (imaginary part {0:e})")]
    NonRealEigenvalue(f64),
    #[error("expected {expected} edge values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error(transparent)]
    Moebius(#[from] MoebiusError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KoebeQd<T> {
    pub lambda: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralQd<T> {
    pub q: Vec<T>,
}

impl<T: Real> KoebeQd<T> {
    pub fn zero(mesh: &TriangulatedDisk) -> Self {
        Self {
            lambda: vec![T::zero(); mesh.interior_edges().len()],
        }
    }

    /// Values spread over all edges of `G`, zero on the boundary.
    pub fn full(&self, mesh: &TriangulatedDisk) -> Vec<T> {
        spread(mesh, &self.lambda)
    }

    pub fn norm(&self) -> T {
        l2(&self.lambda)
    }
}

impl<T: Real> GeneralQd<T> {
    pub fn zero(m: &MedialComplex) -> Self {
        Self {
            q: vec![T::zero(); m.tmg().interior_edges().len()],
        }
    }

    pub fn full(&self, m: &MedialComplex) -> Vec<T> {
        spread(m.tmg(), &self.q)
    }

    pub fn norm(&self) -> T {
        l2(&self.q)
    }
}

fn spread<T: Real>(cx: &TriangleComplex, vals: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); cx.edge_count()];
    for (e, &v) in cx.interior_edges().into_iter().zip(vals) {
        out[e] = v;
    }
    out
}

fn l2<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &x| a + x * x).sqrt()
}

fn check_len(expected: usize, got: usize) -> Result<(), DiffError> {
    if expected != got {
        return Err(DiffError::WrongLength { expected, got });
    }
    Ok(())
}

fn weierstrass_vector<T: Real>(z: C<T>) -> [C<T>; 3] {
    let one = C::new(T::one(), T::zero());
    let i = C::new(T::zero(), T::one());
    let z2 = z * z;
    [one - z2, i * (one + z2), z * T::lit(2.0)]
}

/// Max over interior vertices `u` of `|sum (lambda/omega)(1 - z^2, i(1 + z^2), 2z)|`
/// divided by `sum |lambda/omega| |(1 - z^2, i(1 + z^2), 2z)|`, with `omega`
/// oriented away from `u`. Scales are floored as in [[`relative_max`]].
pub fn check_koebe_qd<T: Real>(
    qd: &KoebeQd<T>,
    mesh: &TriangulatedDisk,
    z: &[C<T>],
) -> Result<T, DiffError> {
    check_len(mesh.interior_edges().len(), qd.lambda.len())?;
    let omega = omega_form_from_points(mesh, z)?;
    let lam = qd.full(mesh);
    let mut sums = Vec::new();
    for u in mesh.interior_vertices() {
        let mut sum = [C::new(T::zero(), T::zero()); 3];
        let mut scale = T::zero();
        for &v in &mesh.fans(u)[0].neighbors {
            let e = mesh.edge_index(u, v).expect("fan edge");
            let w = omega.values[e].expect("interior edge");
            let w = if u < v { w } else { -w };
            let coef = w.inv() * lam[e];
            let wv = weierstrass_vector(z[e]);
            for k in 0..3 {
                sum[k] += wv[k] * coef;
            }
            scale += coef.norm() * (T::lit(2.0).sqrt() * (T::one() + z[e].norm_sqr()));
        }
        let s = sum.iter().fold(T::zero(), |a, x| a + x.norm_sqr()).sqrt();
        sums.push((s, scale));
    }
    Ok(relative_max(&sums))
}

/// Orthonormal basis of the Koebe-type differentials: null space of the six
/// real rows per interior vertex `sum (lambda/omega)(1, w, w^2) = 0`, written
/// in the local coordinate `w = (z - c_u)/R_u`.
pub fn koebe_qd_basis<T: Real>(
    mesh: &TriangulatedDisk,
    z: &[C<T>],
    centers: &[C<T>],
    radii: &[T],
) -> Result<Vec<KoebeQd<T>>, DiffError> {
    let a = koebe_constraints(mesh, z, centers, radii)?;
    let ns = null_space(&a, T::lit(RANK_TOL));
    Ok(ns
        .basis
        .into_iter()
        .map(|lambda| KoebeQd { lambda })
        .collect())
}

pub fn koebe_constraints<T: Real>(
    mesh: &TriangulatedDisk,
    z: &[C<T>],
    centers: &[C<T>],
    radii: &[T],
) -> Result<DMat<T>, DiffError> {
    let omega = omega_form_from_points(mesh, z)?;
    let interior = mesh.interior_edges();
    let col: std::collections::BTreeMap<usize, usize> =
        interior.iter().enumerate().map(|(c, &e)| (e, c)).collect();
    let mut a = DMat::zeros(0, interior.len());
    for u in mesh.interior_vertices() {
        let mut rows = vec![vec![T::zero(); interior.len()]; 6];
        for &v in &mesh.fans(u)[0].neighbors {
            let e = mesh.edge_index(u, v).expect("fan edge");
            let w = omega.values[e].expect("interior edge");
            let w = if u < v { w } else { -w };
            let coef = w.inv() * radii[u];
            let loc = (z[e] - centers[u]) / radii[u];
            let terms = [coef, coef * loc, coef * loc * loc];
            for k in 0..3 {
                rows[2 * k][col[&e]] = terms[k].re;
                rows[2 * k + 1][col[&e]] = terms[k].im;
            }
        }
        for r in &rows {
            a.push_row(r);
        }
    }
    Ok(a)
}

/// General-type residual: at closed medial vertices both `sum q` and
/// `sum q/(z_j - z_i)`; at hinge vertices `sum q` and the component of
/// `sum q/(z_j - z_i)` that is not a real multiple of `1/omega`. Each sum is
/// divided by the sum of the magnitudes of its terms, floored as in
/// [[`relative_max`]].
pub fn check_general_qd<T: Real>(
    qd: &GeneralQd<T>,
    z: &[C<T>],
    m: &MedialComplex,
) -> Result<T, DiffError> {
    let tmg = m.tmg();
    check_len(tmg.interior_edges().len(), qd.q.len())?;
    let q = qd.full(m);
    let omega = omega_form_from_points(m.disk(), z)?;
    let (mut sums0, mut sums1) = (Vec::new(), Vec::new());
    for i in 0..tmg.vertex_count() {
        let kind = m.vertex_kind(i);
        if kind == MedialVertexKind::Open {
            continue;
        }
        let (mut s0, mut n0) = (T::zero(), T::zero());
        let (mut s1, mut n1) = (C::new(T::zero(), T::zero()), T::zero());
        for (e, j) in vertex_edges(tmg, i) {
            let t = C::new(q[e], T::zero()) / (z[j] - z[i]);
            s0 += q[e];
            n0 += q[e].abs();
            s1 += t;
            n1 += t.norm();
        }
        sums0.push((s0.abs(), n0));
        let r = match kind {
            MedialVertexKind::Closed => s1.norm(),
            _ => {
                let w = omega.values[i].expect("hinge edge is interior");
                (s1 * w / w.norm()).im.abs()
            }
        };
        sums1.push((r, n1));
    }
    Ok(relative_max(&sums0).max(relative_max(&sums1)))
}

/// Interior TMG edges at `i` with their other endpoint.
fn vertex_edges(tmg: &TriangleComplex, i: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for fan in tmg.fans(i) {
        for &j in &fan.neighbors {
            let e = tmg.edge_index(i, j).expect("fan edge");
            if tmg.is_interior_edge(e) && !out.iter().any(|&(f, _)| f == e) {
                out.push((e, j));
            }
        }
    }
    out
}

pub fn general_constraints<T: Real>(z: &[C<T>], m: &MedialComplex) -> Result<DMat<T>, DiffError> {
    let tmg = m.tmg();
    let interior = tmg.interior_edges();
    let col: std::collections::BTreeMap<usize, usize> =
        interior.iter().enumerate().map(|(c, &e)| (e, c)).collect();
    let omega = omega_form_from_points(m.disk(), z)?;
    let mut a = DMat::zeros(0, interior.len());
    for i in 0..tmg.vertex_count() {
        let kind = m.vertex_kind(i);
        if kind == MedialVertexKind::Open {
            continue;
        }
        let edges = vertex_edges(tmg, i);
        if edges.is_empty() {
            continue;
        }
        let scale = edges
            .iter()
            .fold(T::zero(), |acc, &(_, j)| acc + (z[j] - z[i]).norm())
            / T::from_usize_lossy(edges.len());
        let mut sum = vec![T::zero(); interior.len()];
        let mut re = vec![T::zero(); interior.len()];
        let mut im = vec![T::zero(); interior.len()];
        let rot = match kind {
            MedialVertexKind::Hinge => {
                let w = omega.values[i].expect("hinge edge is interior");
                w / w.norm()
            }
            _ => C::new(T::one(), T::zero()),
        };
        for &(e, j) in &edges {
            let c = col[&e];
            let t = rot * scale / (z[j] - z[i]);
            sum[c] = T::one();
            re[c] = t.re;
            im[c] = t.im;
        }
        a.push_row(&sum);
        if kind == MedialVertexKind::Closed {
            a.push_row(&re);
        }
        a.push_row(&im);
    }
    Ok(a)
}

/// Orthonormal basis of the general-type differentials on the given `TMG`.
pub fn general_qd_basis<T: Real>(
    z: &[C<T>],
    m: &MedialComplex,
) -> Result<Vec<GeneralQd<T>>, DiffError> {
    let a = general_constraints(z, m)?;
    let ns = null_space(&a, T::lit(RANK_TOL));
    Ok(ns.basis.into_iter().map(|q| GeneralQd { q }).collect())
}

/// Integrated infinitesimal Möbius field per face with its closedness residual.
#[derive(Debug, Clone)]
pub struct PhiField<T> {
    pub phi: Vec<InfMoebius<T>>,
    /// Cycle residual relative to the largest jump.
    pub residual: T,
}

/// Koebe jump `(lambda/omega) [[z, -z^2], [1, -z]]` across each interior edge of `G`.
pub fn koebe_jumps<T: Real>(
    qd: &KoebeQd<T>,
    mesh: &TriangulatedDisk,
    z: &[C<T>],
    omega: &EdgeValues<T>,
) -> Vec<InfMoebius<T>> {
    let lam = qd.full(mesh);
    (0..mesh.edge_count())
        .map(|e| match omega.values[e] {
            Some(w) => parabolic(z[e]).scale(w.inv() * lam[e]),
            None => InfMoebius::zero(),
        })
        .collect()
}

fn parabolic<T: Real>(z: C<T>) -> InfMoebius<T> {
    InfMoebius::new(z, -z * z, C::new(T::one(), T::zero()))
}

fn integrate_field<T: Real>(
    cx: &TriangleComplex,
    jumps: &[InfMoebius<T>],
) -> Result<PhiField<T>, DiffError> {
    let int = integrate_dual_one_form(cx, jumps)?;
    let scale = max_of(jumps.iter().map(|j| j.norm()));
    let residual = if scale > T::zero() {
        int.max_cycle_residual / scale
    } else {
        T::zero()
    };
    if !(residual <= T::lit(CLOSEDNESS_TOL)) {
        return Err(DiffError::NotAQuadraticDifferential(
            residual.to_f64_lossy(),
        ));
    }
    Ok(PhiField {
        phi: int.values,
        residual,
    })
}

pub fn phi_from_koebe_qd<T: Real>(
    qd: &KoebeQd<T>,
    mesh: &TriangulatedDisk,
    z: &[C<T>],
) -> Result<PhiField<T>, DiffError> {
    check_len(mesh.interior_edges().len(), qd.lambda.len())?;
    let omega = omega_form_from_points(mesh, z)?;
    integrate_field(mesh, &koebe_jumps(qd, mesh, z, &omega))
}

/// Velocity at every tangency point read off from the faces of `G` on both
/// sides, with the largest disagreement relative to the largest velocity.
pub fn velocity_from_phi<T: Real>(
    phi: &[InfMoebius<T>],
    mesh: &TriangulatedDisk,
    z: &[C<T>],
) -> Result<(Vec<C<T>>, T), DiffError> {
    let faces: Vec<[usize; 3]> = (0..mesh.face_count()).map(|f| mesh.face_edges(f)).collect();
    velocity_on(phi, &faces, z)
}

/// Same as [`velocity_from_phi`] for a field on the faces of `TMG`.
pub fn velocity_from_phi_hat<T: Real>(
    phi: &[InfMoebius<T>],
    m: &MedialComplex,
    z: &[C<T>],
) -> Result<(Vec<C<T>>, T), DiffError> {
    velocity_on(phi, m.tmg().faces(), z)
}

fn velocity_on<T: Real>(
    phi: &[InfMoebius<T>],
    faces: &[[usize; 3]],
    z: &[C<T>],
) -> Result<(Vec<C<T>>, T), DiffError> {
    let mut zdot: Vec<Option<C<T>>> = vec![None; z.len()];
    let mut mismatch = T::zero();
    for (f, tri) in faces.iter().enumerate() {
        for &v in tri {
            let w = phi[f].velocity_at(z[v]);
            match zdot[v] {
                None => zdot[v] = Some(w),
                Some(prev) => mismatch = mismatch.max((prev - w).norm()),
            }
        }
    }
    let zdot: Vec<C<T>> = zdot
        .into_iter()
        .map(|w| w.unwrap_or(C::new(T::zero(), T::zero())))
        .collect();
    let scale = max_of(zdot.iter().map(|w| w.norm()));
    let rel = if scale > T::zero() {
        mismatch / scale
    } else {
        mismatch
    };
    if !(rel <= T::lit(CLOSEDNESS_TOL)) {
        return Err(DiffError::SideMismatch(rel.to_f64_lossy()));
    }
    Ok((zdot, rel))
}

/// `Phi` on the faces of `G`, `Phi-hat` on the faces of `TMG` and the tangency
/// point velocities of one deformation.
#[derive(Debug, Clone)]
pub struct DeformationField<T> {
    pub phi: Vec<InfMoebius<T>>,
    pub phi_hat: Vec<InfMoebius<T>>,
    pub zdot: Vec<C<T>>,
    /// Largest `|Phi-hat - Phi|` over the faces of `G`, relative to the largest `|Phi|`.
    pub restriction_defect: T,
}

pub fn deformation_from_koebe_qd<T: Real>(
    qd: &KoebeQd<T>,
    z: &[C<T>],
    m: &MedialComplex,
) -> Result<DeformationField<T>, DiffError> {
    let phi = phi_from_koebe_qd(qd, m.disk(), z)?.phi;
    let (zdot, _) = velocity_from_phi(&phi, m.disk(), z)?;
    let phi_hat = phi_hat_from_velocity(z, &zdot, m)?;
    let diff = max_of(
        phi.iter()
            .enumerate()
            .map(|(f, x)| (phi_hat[m.tmg_face_of_g_face(f)] - *x).norm()),
    );
    let scale = max_of(phi.iter().map(|x| x.norm()));
    let restriction_defect = if scale > T::zero() {
        diff / scale
    } else {
        diff
    };
    Ok(DeformationField {
        phi,
        phi_hat,
        zdot,
        restriction_defect,
    })
}

/// Infinitesimal Möbius transformation per `TMG` face fitted to the velocities
/// of its three vertices.
pub fn phi_hat_from_velocity<T: Real>(
    z: &[C<T>],
    zdot: &[C<T>],
    m: &MedialComplex,
) -> Result<Vec<InfMoebius<T>>, DiffError> {
    m.tmg()
        .faces()
        .iter()
        .map(|&[a, b, c]| {
            fit_inf_moebius([z[a], z[b], z[c]], [zdot[a], zdot[b], zdot[c]]).map_err(Into::into)
        })
        .collect()
}

/// General-type jump `(q/(z_j - z_i)) [[(z_i+z_j)/2, -z_i z_j], [1, -(z_i+z_j)/2]]`
/// from the face left of `i -> j` to the face on its right.
pub fn general_jump<T: Real>(q: T, zi: C<T>, zj: C<T>) -> InfMoebius<T> {
    let h = (zi + zj) / T::lit(2.0);
    InfMoebius::new(h, -zi * zj, C::new(T::one(), T::zero()))
        .scale(C::new(q, T::zero()) / (zj - zi))
}

/// General differential read off from the jumps of `Phi-hat`, with the
/// largest imaginary part and the largest deviation of a jump from the
/// general-type form, both relative to the largest `|q|`.
#[derive(Debug, Clone)]
pub struct GeneralFromVelocity<T> {
    pub qd: GeneralQd<T>,
    pub max_imag: T,
    pub form_defect: T,
}

pub fn general_qd_from_velocity<T: Real>(
    z: &[C<T>],
    zdot: &[C<T>],
    m: &MedialComplex,
) -> Result<GeneralFromVelocity<T>, DiffError> {
    let phi = phi_hat_from_velocity(z, zdot, m)?;
    let tmg = m.tmg();
    let mut q = Vec::new();
    let mut max_imag = T::zero();
    let mut defect = T::zero();
    for e in tmg.interior_edges() {
        let (i, j) = tmg.edge(e);
        let jump = phi[tmg.right_face(e).unwrap()] - phi[tmg.left_face(e).unwrap()];
        let qc = jump.c * (z[j] - z[i]);
        max_imag = max_imag.max(qc.im.abs());
        defect = defect.max((jump - general_jump(qc.re, z[i], z[j])).norm() * (z[j] - z[i]).norm());
        q.push(qc.re);
    }
    let floor = T::lit(1e-9) * max_of(zdot.iter().map(|w| w.norm()))
        / tmg
            .interior_edges()
            .into_iter()
            .map(|e| {
                let (i, j) = tmg.edge(e);
                (z[j] - z[i]).norm()
            })
            .fold(T::infinity(), |a, b| a.min(b));
    let scale = max_of(q.iter().map(|x| x.abs())).max(floor);
    let (max_imag, form_defect) = if scale > T::zero() {
        (max_imag / scale, defect / scale)
    } else {
        (max_imag, defect)
    };
    if !(max_imag <= T::lit(1e-6)) {
        return Err(DiffError::NonRealEigenvalue(max_imag.to_f64_lossy()));
    }
    Ok(GeneralFromVelocity {
        qd: GeneralQd { q },
        max_imag,
        form_defect,
    })
}

/// `lambda = d/dt cr-dagger / cr-dagger` per interior edge for velocities `zdot`,
/// with the largest imaginary part relative to the largest `|lambda|`.
pub fn koebe_qd_from_velocity<T: Real>(
    mesh: &TriangulatedDisk,
    z: &[C<T>],
    zdot: &[C<T>],
) -> (KoebeQd<T>, T) {
    let mut lambda = Vec::new();
    let mut imag = T::zero();
    for e in mesh.interior_edges() {
        let s = edge_star(mesh, e).expect("interior edge");
        let idx = [s.i, s.j, s.k, s.m];
        let d = cross_ratio_log_derivative(idx.map(|k| z[k]), idx.map(|k| zdot[k]));
        imag = imag.max(d.im.abs());
        lambda.push(d.re);
    }
    let scale = max_of(lambda.iter().map(|x| x.abs()));
    let imag = if scale > T::zero() {
        imag / scale
    } else {
        imag
    };
    (KoebeQd { lambda }, imag)
}

/// `q = d/dt cr / cr` per interior edge of `TMG` with `cr = cr(z_j, z_k, z_i, z_l)`.
pub fn general_qd_log_derivative<T: Real>(
    z: &[C<T>],
    zdot: &[C<T>],
    m: &MedialComplex,
) -> (GeneralQd<T>, T) {
    let tmg = m.tmg();
    let mut q = Vec::new();
    let mut imag = T::zero();
    for e in tmg.interior_edges() {
        let (i, j, k, l) = edge_wings(tmg, e).expect("interior edge");
        let idx = [j, k, i, l];
        let d = cross_ratio_log_derivative(idx.map(|v| z[v]), idx.map(|v| zdot[v]));
        imag = imag.max(d.im.abs());
        q.push(d.re);
    }
    (GeneralQd { q }, imag)
}

/// Velocities of the deformation generated by a Koebe-type differential.
pub fn velocity_from_koebe_qd<T: Real>(
    qd: &KoebeQd<T>,
    mesh: &TriangulatedDisk,
    z: &[C<T>],
) -> Result<Vec<C<T>>, DiffError> {
    let field = phi_from_koebe_qd(qd, mesh, z)?;
    Ok(velocity_from_phi(&field.phi, mesh, z)?.0)
}

pub fn koebe_to_general<T: Real>(
    qd: &KoebeQd<T>,
    z: &[C<T>],
    m: &MedialComplex,
) -> Result<GeneralFromVelocity<T>, DiffError> {
    let zdot = velocity_from_koebe_qd(qd, m.disk(), z)?;
    general_qd_from_velocity(z, &zdot, m)
}

/// Integrates the general-type jumps over the dual of `TMG`.
pub fn phi_hat_from_general_qd<T: Real>(
    qd: &GeneralQd<T>,
    z: &[C<T>],
    m: &MedialComplex,
) -> Result<PhiField<T>, DiffError> {
    let tmg = m.tmg();
    check_len(tmg.interior_edges().len(), qd.q.len())?;
    let q = qd.full(m);
    let jumps: Vec<InfMoebius<T>> = (0..tmg.edge_count())
        .map(|e| {
            if tmg.is_interior_edge(e) {
                let (i, j) = tmg.edge(e);
                -general_jump(q[e], z[i], z[j])
            } else {
                InfMoebius::zero()
            }
        })
        .collect();
    integrate_field(tmg, &jumps)
}

pub fn general_to_koebe<T: Real>(
    qd: &GeneralQd<T>,
    z: &[C<T>],
    m: &MedialComplex,
) -> Result<(KoebeQd<T>, T), DiffError> {
    let field = phi_hat_from_general_qd(qd, z, m)?;
    let (zdot, _) = velocity_from_phi_hat(&field.phi, m, z)?;
    Ok(koebe_qd_from_velocity(m.disk(), z, &zdot))
}

/// Least-squares global infinitesimal Möbius field matching `zdot`, and the
/// remainder `zdot - Phi0(z)`.
pub fn project_moebius<T: Real>(z: &[C<T>], zdot: &[C<T>]) -> (InfMoebius<T>, Vec<C<T>>) {
    let basis = InfMoebius::<T>::real_basis();
    let mut a = DMat::zeros(2 * z.len(), 6);
    let mut b = vec![T::zero(); 2 * z.len()];
    for (r, (&zi, &wi)) in z.iter().zip(zdot).enumerate() {
        for (k, g) in basis.iter().enumerate() {
            let v = g.velocity_at(zi);
            a[(2 * r, k)] = v.re;
            a[(2 * r + 1, k)] = v.im;
        }
        b[2 * r] = wi.re;
        b[2 * r + 1] = wi.im;
    }
    let x = least_squares(&a, &b, T::lit(1e-12));
    let phi0 = InfMoebius::from_reals(&x);
    let rest = z
        .iter()
        .zip(zdot)
        .map(|(&zi, &wi)| wi - phi0.velocity_at(zi))
        .collect();
    (phi0, rest)
}
