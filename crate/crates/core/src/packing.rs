//! Circle packings: radii solver, layout, tangency points, stereographic
//! lift, spherical circles and their poles, and the Koebe polyhedra.

use std::collections::VecDeque;
use std::sync::Arc;

use thiserror::Error;

use crate::geom::{signed_area, Vec3};
use crate::mesh::{MeshError, TriangulatedDisk};
use crate::scalar::{max_of, Real, C};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PackingError {
    #[error("radii iteration did not converge in {max_iter} iterations (angle error {error:e})")]
    NoConvergence { max_iter: usize, error: f64 },
    #[error("invalid boundary data: {0}")]
    InvalidBoundaryData(String),
    #[error("lifted plane passes too close to the origin (|h| = {0:e})")]
    DegeneratePlane(f64),
    #[error("zero tangent vector")]
    ZeroTangent,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Smallest admissible plane offset for lifted circles.
pub const H_MIN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CirclePacking<T> {
    pub mesh: Arc<TriangulatedDisk>,
    pub centers: Vec<C<T>>,
    pub radii: Vec<T>,
}

impl<T: Real> CirclePacking<T> {
    pub fn new(mesh: Arc<TriangulatedDisk>, centers: Vec<C<T>>, radii: Vec<T>) -> Self {
        assert_eq!(centers.len(), mesh.vertex_count());
        assert_eq!(radii.len(), mesh.vertex_count());
        Self {
            mesh,
            centers,
            radii,
        }
    }

    /// Max over edges of `| |c_v - c_u| - (R_u + R_v) | / (R_u + R_v)`.
    pub fn tangency_residual(&self) -> T {
        max_of(self.mesh.edges().iter().map(|&(u, v)| {
            let s = self.radii[u] + self.radii[v];
            ((self.centers[v] - self.centers[u]).norm() - s).abs() / s
        }))
    }

    /// True when every face has positive signed area.
    pub fn is_positively_oriented(&self) -> bool {
        self.mesh.faces().iter().all(|&[a, b, c]| {
            signed_area(self.centers[a], self.centers[b], self.centers[c]) > T::zero()
        })
    }

    /// Max over interior vertices of `|angle sum - 2 pi|`.
    pub fn angle_error(&self) -> T {
        let mesh = &self.mesh;
        max_of(
            mesh.interior_vertices()
                .into_iter()
                .map(|v| (angle_sum(mesh, &self.radii, v) - T::TAU()).abs()),
        )
    }

    /// Applies `z -> scale * z + shift` to the whole packing.
    pub fn transformed(&self, scale: T, shift: C<T>) -> Self {
        Self {
            mesh: self.mesh.clone(),
            centers: self.centers.iter().map(|&c| c * scale + shift).collect(),
            radii: self.radii.iter().map(|&r| r * scale).collect(),
        }
    }

    pub fn tangency_points(&self) -> Vec<C<T>> {
        tangency_points(self)
    }
}

/// Interior angle at the circle of radius `rv` in a triple of mutually
/// tangent circles.
pub fn tangent_angle<T: Real>(rv: T, ru: T, rw: T) -> T {
    T::lit(2.0) * (ru * rw / (rv * (rv + ru + rw))).sqrt().atan()
}

fn angle_sum<T: Real>(mesh: &TriangulatedDisk, radii: &[T], v: usize) -> T {
    let fan = &mesh.fans(v)[0];
    let k = fan.faces.len();
    (0..k).fold(T::zero(), |acc, j| {
        let a = fan.neighbors[j];
        let b = fan.neighbors[(j + 1) % fan.neighbors.len()];
        acc + tangent_angle(radii[v], radii[a], radii[b])
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-12),
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport<T> {
    pub iterations: usize,
    pub max_angle_error: T,
    pub tangency_residual: T,
}

/// Solves for interior radii given boundary radii (listed for the boundary
/// vertices in ascending index order) and lays the packing out in the plane.
///
/// Layout: vertex 0 at the origin, the center of its lowest-index neighbor
/// on the positive real axis.
pub fn solve_packing<T: Real>(
    mesh: Arc<TriangulatedDisk>,
    boundary_radii: &[T],
    opts: SolveOptions<T>,
) -> Result<(CirclePacking<T>, SolveReport<T>), PackingError> {
    let boundary = mesh.boundary_vertices();
    if boundary.len() != boundary_radii.len() {
        return Err(PackingError::InvalidBoundaryData(format!(
            "expected {} boundary radii, got {}",
            boundary.len(),
            boundary_radii.len()
        )));
    }
    if boundary_radii
        .iter()
        .any(|r| !(r.is_finite() && *r > T::zero()))
    {
        return Err(PackingError::InvalidBoundaryData(
            "boundary radii must be positive and finite".into(),
        ));
    }
    let mut radii = vec![T::zero(); mesh.vertex_count()];
    let mean = boundary_radii.iter().fold(T::zero(), |a, &r| a + r)
        / T::from_usize_lossy(boundary_radii.len());
    for r in radii.iter_mut() {
        *r = mean;
    }
    for (&v, &r) in boundary.iter().zip(boundary_radii) {
        radii[v] = r;
    }
    let iterations = iterate_radii(&mesh, &mut radii, opts)?;
    let centers = layout(&mesh, &radii)?;
    let packing = CirclePacking::new(mesh, centers, radii);
    let report = SolveReport {
        iterations,
        max_angle_error: packing.angle_error(),
        tangency_residual: packing.tangency_residual(),
    };
    Ok((packing, report))
}

fn iterate_radii<T: Real>(
    mesh: &TriangulatedDisk,
    radii: &mut [T],
    opts: SolveOptions<T>,
) -> Result<usize, PackingError> {
    let interior = mesh.interior_vertices();
    let error = |radii: &[T]| {
        max_of(
            interior
                .iter()
                .map(|&v| (angle_sum(mesh, radii, v) - T::TAU()).abs()),
        )
    };
    let mut err = error(radii);
    let mut prev_step: Option<Vec<T>> = None;
    let two = T::lit(2.0);
    for it in 0..opts.max_iter {
        if err < opts.tol {
            return Ok(it);
        }
        let before: Vec<T> = interior.iter().map(|&v| radii[v].ln()).collect();
        for &v in &interior {
            let k = T::from_usize_lossy(mesh.fans(v)[0].faces.len());
            let theta = angle_sum(mesh, radii, v);
            let beta = (theta / (two * k)).sin();
            let delta = (T::PI() / k).sin();
            let rhat = radii[v] * beta / (T::one() - beta);
            radii[v] = rhat * (T::one() - delta) / delta;
        }
        let step: Vec<T> = interior
            .iter()
            .zip(&before)
            .map(|(&v, &b)| radii[v].ln() - b)
            .collect();
        err = error(radii);
        if let Some(prev) = &prev_step {
            if let Some(factor) = superstep_factor(prev, &step) {
                let saved: Vec<T> = interior.iter().map(|&v| radii[v]).collect();
                for (&v, &s) in interior.iter().zip(&step) {
                    radii[v] = (radii[v].ln() + factor * s).exp();
                }
                let trial = error(radii);
                if trial < err {
                    err = trial;
                } else {
                    for (&v, &r) in interior.iter().zip(&saved) {
                        radii[v] = r;
                    }
                }
            }
        }
        prev_step = Some(step);
    }
    if err < opts.tol {
        return Ok(opts.max_iter);
    }
    Err(PackingError::NoConvergence {
        max_iter: opts.max_iter,
        error: err.to_f64_lossy(),
    })
}

/// Geometric extrapolation factor when two consecutive steps are nearly parallel.
fn superstep_factor<T: Real>(prev: &[T], step: &[T]) -> Option<T> {
    let dot = prev
        .iter()
        .zip(step)
        .fold(T::zero(), |a, (&x, &y)| a + x * y);
    let np = prev.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
    let ns = step.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
    if np == T::zero() || ns == T::zero() {
        return None;
    }
    let cos = dot / (np * ns);
    let ratio = ns / np;
    if cos > T::lit(0.99) && ratio < T::lit(0.999) {
        Some((ratio / (T::one() - ratio)).min(T::lit(1000.0)))
    } else {
        None
    }
}

fn layout<T: Real>(mesh: &TriangulatedDisk, radii: &[T]) -> Result<Vec<C<T>>, PackingError> {
    let n = mesh.vertex_count();
    let mut centers: Vec<Option<C<T>>> = vec![None; n];
    let first = mesh.fans(0)[0]
        .neighbors
        .iter()
        .copied()
        .min()
        .expect("vertex 0 has neighbors");
    centers[0] = Some(C::new(T::zero(), T::zero()));
    centers[first] = Some(C::new(radii[0] + radii[first], T::zero()));
    let start = mesh
        .left_of(0, first)
        .or_else(|| mesh.left_of(first, 0))
        .expect("edge has a face");
    let mut seen = vec![false; mesh.face_count()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(f) = queue.pop_front() {
        place_third(mesh.face(f), radii, &mut centers);
        for (_, g) in mesh.dual_neighbors(f) {
            if !seen[g] {
                seen[g] = true;
                queue.push_back(g);
            }
        }
    }
    centers
        .into_iter()
        .map(|c| c.ok_or(PackingError::Mesh(MeshError::DisconnectedDual)))
        .collect()
}

fn place_third<T: Real>(face: [usize; 3], radii: &[T], centers: &mut [Option<C<T>>]) {
    for k in 0..3 {
        let (u, v, s) = (face[k], face[(k + 1) % 3], face[(k + 2) % 3]);
        if let (Some(cu), Some(cv), None) = (centers[u], centers[v], centers[s]) {
            let theta = tangent_angle(radii[u], radii[v], radii[s]);
            let dir = (cv - cu).arg() + theta;
            centers[s] = Some(cu + C::from_polar(radii[u] + radii[s], dir));
            return;
        }
    }
}

/// Tangency point per edge of the mesh (indexed like the medial vertices).
pub fn tangency_points<T: Real>(p: &CirclePacking<T>) -> Vec<C<T>> {
    p.mesh
        .edges()
        .iter()
        .map(|&(u, v)| {
            let (cu, cv) = (p.centers[u], p.centers[v]);
            cu + (cv - cu) * (p.radii[u] / (p.radii[u] + p.radii[v]))
        })
        .collect()
}

/// Inverse stereographic projection onto the unit sphere.
pub fn stereographic<T: Real>(z: C<T>) -> Vec3<T> {
    let n = z.norm_sqr();
    let d = T::one() + n;
    Vec3::new(
        T::lit(2.0) * z.re / d,
        T::lit(2.0) * z.im / d,
        (n - T::one()) / d,
    )
}

/// Differential of [`stereographic`] at `z` applied to the tangent vector `v`.
pub fn d_sigma<T: Real>(z: C<T>, v: C<T>) -> Result<Vec3<T>, PackingError> {
    if v.norm_sqr() == T::zero() {
        return Err(PackingError::ZeroTangent);
    }
    let one = C::new(T::one(), T::zero());
    let i = C::new(T::zero(), T::one());
    let z2 = z * z;
    let s = T::lit(2.0) * v.norm_sqr() / (T::one() + z.norm_sqr()).powi(2);
    let inv = one / v;
    Ok(Vec3::new(
        (inv * (one - z2)).re,
        (inv * i * (one + z2)).re,
        (inv * z * T::lit(2.0)).re,
    ) * s)
}

/// Plane `{x : <n, x> = h}` cutting the unit sphere in a circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePlane<T> {
    pub n: Vec3<T>,
    pub h: T,
}

impl<T: Real> SpherePlane<T> {
    /// Pole of the plane: the point whose polar plane is this plane.
    pub fn pole(&self) -> Result<Vec3<T>, PackingError> {
        circle_pole(self.n, self.h)
    }
}

/// Plane through three points on the sphere, oriented so that `inside` lies
/// on the side `<n, x> > h`.
pub fn plane_through<T: Real>(
    a: Vec3<T>,
    b: Vec3<T>,
    c: Vec3<T>,
    inside: Vec3<T>,
) -> Result<SpherePlane<T>, PackingError> {
    let n = (b - a)
        .cross(c - a)
        .normalized()
        .ok_or(PackingError::DegeneratePlane(0.0))?;
    let h = (n.dot(a) + n.dot(b) + n.dot(c)) / T::lit(3.0);
    let (n, h) = if n.dot(inside) < h { (-n, -h) } else { (n, h) };
    if h.abs() < T::lit(H_MIN) {
        return Err(PackingError::DegeneratePlane(h.to_f64_lossy()));
    }
    Ok(SpherePlane { n, h })
}

/// Lift of a planar circle to the sphere; the interior of the disk maps to
/// the side `<n, x> > h`.
pub fn lift_circle<T: Real>(center: C<T>, radius: T) -> Result<SpherePlane<T>, PackingError> {
    if !(radius > T::zero()) {
        return Err(PackingError::InvalidBoundaryData(
            "radius must be positive".into(),
        ));
    }
    let third = T::TAU() / T::lit(3.0);
    let p = |k: f64| stereographic(center + C::from_polar(radius, third * T::lit(k)));
    plane_through(p(0.0), p(1.0), p(2.0), stereographic(center))
}

pub fn circle_pole<T: Real>(n: Vec3<T>, h: T) -> Result<Vec3<T>, PackingError> {
    if !(h.abs() >= T::lit(H_MIN)) {
        return Err(PackingError::DegeneratePlane(h.to_f64_lossy()));
    }
    Ok(n / h)
}

/// Lifted circles, dual circles and tangency points of a packing.
#[derive(Debug, Clone)]
pub struct SphericalLift<T> {
    pub vertex_planes: Vec<SpherePlane<T>>,
    pub face_planes: Vec<SpherePlane<T>>,
    /// `sigma(z_i)` per medial vertex.
    pub tangency: Vec<Vec3<T>>,
}

pub fn spherical_lift<T: Real>(p: &CirclePacking<T>) -> Result<SphericalLift<T>, PackingError> {
    let z = tangency_points(p);
    let tangency: Vec<Vec3<T>> = z.iter().map(|&w| stereographic(w)).collect();
    let vertex_planes = p
        .centers
        .iter()
        .zip(&p.radii)
        .map(|(&c, &r)| lift_circle(c, r))
        .collect::<Result<Vec<_>, _>>()?;
    let face_planes = (0..p.mesh.face_count())
        .map(|f| {
            let [a, b, c] = p.mesh.face_edges(f);
            let incenter = (z[a] + z[b] + z[c]) / T::lit(3.0);
            plane_through(
                tangency[a],
                tangency[b],
                tangency[c],
                stereographic(incenter),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SphericalLift {
        vertex_planes,
        face_planes,
        tangency,
    })
}

/// Vertices of the two Koebe polyhedra: `n_c` per face, `n_cstar` per vertex.
#[derive(Debug, Clone)]
pub struct KoebePair<T> {
    pub n_c: Vec<Vec3<T>>,
    pub n_cstar: Vec<Vec3<T>>,
}

impl<T: Real> KoebePair<T> {
    /// Max of `|<N, sigma(z_i)> - 1|` over interior edges (face poles) and all
    /// edges (vertex poles).
    pub fn tangency_residual(&self, mesh: &TriangulatedDisk, lift: &SphericalLift<T>) -> T {
        let mut worst = T::zero();
        for (e, &(u, v)) in mesh.edges().iter().enumerate() {
            let s = lift.tangency[e];
            for f in [mesh.left_face(e), mesh.right_face(e)]
                .into_iter()
                .flatten()
            {
                worst = worst.max((self.n_c[f].dot(s) - T::one()).abs());
            }
            for w in [u, v] {
                worst = worst.max((self.n_cstar[w].dot(s) - T::one()).abs());
            }
        }
        worst
    }
}

pub fn koebe_polyhedra<T: Real>(lift: &SphericalLift<T>) -> Result<KoebePair<T>, PackingError> {
    Ok(KoebePair {
        n_c: lift
            .face_planes
            .iter()
            .map(SpherePlane::pole)
            .collect::<Result<_, _>>()?,
        n_cstar: lift
            .vertex_planes
            .iter()
            .map(SpherePlane::pole)
            .collect::<Result<_, _>>()?,
    })
}

/// Translates the centroid of the tangency points to 0 and scales the packing
/// into the disk of radius 1/2, halving further while any lifted plane is
/// degenerate. Returns the normalized packing and its lift.
pub fn normalize_for_lifting<T: Real>(
    p: &CirclePacking<T>,
) -> Result<(CirclePacking<T>, SphericalLift<T>), PackingError> {
    let z = tangency_points(p);
    let centroid = z.iter().fold(C::new(T::zero(), T::zero()), |a, &w| a + w)
        / T::from_usize_lossy(z.len().max(1));
    let extent = max_of(
        p.centers
            .iter()
            .zip(&p.radii)
            .map(|(&c, &r)| (c - centroid).norm() + r),
    );
    let mut scale = T::lit(0.5) / extent;
    let mut last = PackingError::DegeneratePlane(0.0);
    for _ in 0..=8 {
        let q = p.transformed(scale, -centroid * scale);
        match spherical_lift(&q) {
            Ok(lift) => return Ok((q, lift)),
            Err(e @ PackingError::DegeneratePlane(_)) => last = e,
            Err(e) => return Err(e),
        }
        scale *= T::lit(0.5);
    }
    Err(last)
}
