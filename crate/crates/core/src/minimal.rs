//! Weierstrass data of Koebe and general type and the discrete minimal
//! surfaces they integrate to.

use std::collections::HashMap;

use thiserror::Error;

use crate::differentials::{
    check_general_qd, koebe_to_general, DiffError, GeneralQd, KoebeQd, CLOSEDNESS_TOL,
};
use crate::geom::{CVec3, Vec3};
use crate::invariants::omega_form_from_points;
use crate::linalg::{symmetric_eigen, DMat};
use crate::mesh::{
    integrate_dual_one_form, MedialComplex, MedialVertexKind, TriangleComplex, TriangulatedDisk,
};
use crate::moebius::InfMoebius;
use crate::packing::{stereographic, KoebePair, SphericalLift};
use crate::scalar::{max_of, Real, C, SCALE_FLOOR};

/// Guard band around a folded edge, `|alpha - pi|`.
pub const FOLD_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinimalError {
    #[error("edge function is not a quadratic differential (cycle residual {0:e})")]
    NotAQuadraticDifferential(f64),
    #[error("antipodal normals across medial edge {0}")]
    AntipodalNormals(usize),
    #[error("folded edge in face {0}")]
    FoldedEdge(usize),
    #[error("degenerate face {0}")]
    DegenerateFace(usize),
    #[error("face {0} has an edge without a neighbour")]
    OpenFace(usize),
    #[error("zero-length primal edge {0}")]
    ZeroEdge(usize),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// `C^3`-valued surface on faces with the closedness residual of its
/// defining dual form, relative to the largest jump.
#[derive(Debug, Clone)]
pub struct DualSurface<T> {
    pub values: Vec<CVec3<T>>,
    pub jumps: Vec<CVec3<T>>,
    pub residual: T,
}

impl<T: Real> DualSurface<T> {
    pub fn re(&self) -> Vec<Vec3<T>> {
        self.values.iter().map(|v| v.re()).collect()
    }

    pub fn im(&self) -> Vec<Vec3<T>> {
        self.values.iter().map(|v| v.im()).collect()
    }

    pub fn scale(&self) -> T {
        max_of(self.jumps.iter().map(|j| j.norm()))
    }
}

/// `(c + b, i(c - b), 2a)` for `[[a, b], [c, -a]]`: the linear map taking
/// `Phi` to the Weierstrass surface.
pub fn weierstrass_image<T: Real>(m: &InfMoebius<T>) -> CVec3<T> {
    let i = C::new(T::zero(), T::one());
    CVec3::new(m.c + m.b, i * (m.c - m.b), m.a * T::lit(2.0))
}

fn integrate<T: Real>(
    cx: &TriangleComplex,
    jumps: Vec<CVec3<T>>,
) -> Result<DualSurface<T>, MinimalError> {
    let int = integrate_dual_one_form(cx, &jumps).map_err(DiffError::from)?;
    let scale = max_of(jumps.iter().map(|j| j.norm()));
    let residual = if scale > T::zero() {
        int.max_cycle_residual / scale
    } else {
        T::zero()
    };
    if !(residual <= T::lit(CLOSEDNESS_TOL)) {
        return Err(MinimalError::NotAQuadraticDifferential(
            residual.to_f64_lossy(),
        ));
    }
    Ok(DualSurface {
        values: int.values,
        jumps,
        residual,
    })
}

/// `F_left - F_right = (lambda/omega)(1 - z^2, i(1 + z^2), 2z)` across every
/// interior edge `(u, v)`, `u < v`; `F = 0` on face 0.
pub fn weierstrass_koebe<T: Real>(
    qd: &KoebeQd<T>,
    mesh: &TriangulatedDisk,
    z: &[C<T>],
) -> Result<DualSurface<T>, MinimalError> {
    let omega = omega_form_from_points(mesh, z).map_err(DiffError::from)?;
    let lam = qd.full(mesh);
    let one = C::new(T::one(), T::zero());
    let i = C::new(T::zero(), T::one());
    let jumps = (0..mesh.edge_count())
        .map(|e| match omega.values[e] {
            Some(w) => {
                let z = z[e];
                CVec3::new(one - z * z, i * (one + z * z), z * T::lit(2.0)).scale(w.inv() * lam[e])
            }
            None => CVec3::zero(),
        })
        .collect();
    integrate(mesh, jumps)
}

/// `F-hat_right - F-hat_left = (q/(z_j - z_i))(1 - z_i z_j, i(1 + z_i z_j), z_i + z_j)`
/// across every interior edge `(i, j)` of `TMG`.
pub fn weierstrass_general<T: Real>(
    qd: &GeneralQd<T>,
    z: &[C<T>],
    m: &MedialComplex,
) -> Result<DualSurface<T>, MinimalError> {
    let tmg = m.tmg();
    let q = qd.full(m);
    let one = C::new(T::one(), T::zero());
    let i = C::new(T::zero(), T::one());
    let mut jumps = vec![CVec3::zero(); tmg.edge_count()];
    for e in tmg.interior_edges() {
        let (a, b) = tmg.edge(e);
        let (za, zb) = (z[a], z[b]);
        let p = za * zb;
        if (one + za * zb.conj()).norm() <= T::lit(1e-12) * (T::one() + za.norm() * zb.norm()) {
            return Err(MinimalError::AntipodalNormals(e));
        }
        let v = CVec3::new(one - p, i * (one + p), za + zb);
        jumps[e] = -v.scale(C::new(q[e], T::zero()) / (zb - za));
    }
    integrate(tmg, jumps)
}

/// `sum_j f_j x N_{j+1} + N_j x f_{j+1}` over a cyclic face.
pub fn koebe_mean_curvature<T: Real>(f: &[Vec3<T>], n: &[Vec3<T>]) -> Vec3<T> {
    let k = f.len();
    (0..k).fold(Vec3::zero(), |acc, j| {
        let j1 = (j + 1) % k;
        acc + f[j].cross(n[j1]) + n[j].cross(f[j1])
    })
}

/// `sum_j p_j x p_{j+1}`, twice the vector area of a closed polygon.
pub fn area_vector<T: Real>(p: &[Vec3<T>]) -> Vec3<T> {
    let k = p.len();
    (0..k).fold(Vec3::zero(), |acc, j| acc + p[j].cross(p[(j + 1) % k]))
}

fn perimeter<T: Real>(p: &[Vec3<T>]) -> T {
    let k = p.len();
    (0..k).fold(T::zero(), |acc, j| acc + (p[(j + 1) % k] - p[j]).norm())
}

/// Polyhedral surface with polygonal faces given as cyclic vertex lists.
#[derive(Debug, Clone)]
pub struct PolySurface<T> {
    pub points: Vec<Vec3<T>>,
    pub faces: Vec<Vec<usize>>,
    edge_faces: HashMap<(usize, usize), usize>,
}

impl<T: Real> PolySurface<T> {
    pub fn new(points: Vec<Vec3<T>>, faces: Vec<Vec<usize>>) -> Self {
        let mut edge_faces = HashMap::new();
        for (f, face) in faces.iter().enumerate() {
            for k in 0..face.len() {
                edge_faces.insert((face[k], face[(k + 1) % face.len()]), f);
            }
        }
        Self {
            points,
            faces,
            edge_faces,
        }
    }

    fn corners(&self, f: usize) -> Vec<Vec3<T>> {
        self.faces[f].iter().map(|&v| self.points[v]).collect()
    }

    /// Unit normal from the vector area, right-handed with the stored order.
    pub fn normal(&self, f: usize) -> Result<Vec3<T>, MinimalError> {
        let p = self.corners(f);
        let per = perimeter(&p);
        let a = area_vector(&p);
        if !(a.norm() > T::epsilon() * per * per) {
            return Err(MinimalError::DegenerateFace(f));
        }
        Ok(a / a.norm())
    }

    pub fn perimeter(&self, f: usize) -> T {
        perimeter(&self.corners(f))
    }

    /// Whether every edge of positive length has a neighbouring face.
    pub fn is_closed_face(&self, f: usize) -> bool {
        let face = &self.faces[f];
        (0..face.len()).all(|k| {
            let (a, b) = (face[k], face[(k + 1) % face.len()]);
            self.edge_faces.contains_key(&(b, a)) || self.points[a] == self.points[b]
        })
    }

    /// `sum l tan(alpha/2)` over the edges of face `f`, with `alpha` the signed
    /// dihedral angle (positive on convex edges).
    pub fn mean_curvature(&self, f: usize) -> Result<T, MinimalError> {
        let face = &self.faces[f];
        let na = self.normal(f)?;
        let tiny = T::epsilon() * T::lit(16.0) * self.perimeter(f);
        let mut h = T::zero();
        for k in 0..face.len() {
            let (a, b) = (face[k], face[(k + 1) % face.len()]);
            let d = self.points[b] - self.points[a];
            let l = d.norm();
            if l <= tiny {
                continue;
            }
            let g = *self
                .edge_faces
                .get(&(b, a))
                .ok_or(MinimalError::OpenFace(f))?;
            let nb = self.normal(g)?;
            let alpha = na.cross(nb).dot(d / l).atan2(na.dot(nb));
            if (alpha.abs() - T::PI()).abs() < T::lit(FOLD_GUARD) {
                return Err(MinimalError::FoldedEdge(f));
            }
            h += l * (alpha / T::lit(2.0)).tan();
        }
        Ok(h)
    }
}

pub fn general_mean_curvature<T: Real>(
    surface: &PolySurface<T>,
    f: usize,
) -> Result<T, MinimalError> {
    surface.mean_curvature(f)
}

/// Max over pairs of `|a x b| / (|a| |b|)`. Pairs whose `a` vanishes to
/// rounding are skipped; a vanishing `b` is an error.
pub fn check_reciprocal_parallel<T: Real>(a: &[Vec3<T>], b: &[Vec3<T>]) -> Result<T, MinimalError> {
    let amax = max_of(a.iter().map(|x| x.norm()));
    let bmax = max_of(b.iter().map(|x| x.norm()));
    let mut worst = T::zero();
    for (k, (&x, &y)) in a.iter().zip(b).enumerate() {
        if !(y.norm() > T::epsilon() * bmax) {
            return Err(MinimalError::ZeroEdge(k));
        }
        if x.norm() <= T::lit(1e-12) * amax {
            continue;
        }
        worst = worst.max(x.cross(y).norm() / (x.norm() * y.norm()));
    }
    Ok(worst)
}

fn interior_edge_jumps<T: Real>(
    mesh: &TriangulatedDisk,
    values: &[Vec3<T>],
) -> Vec<(usize, Vec3<T>)> {
    mesh.interior_edges()
        .into_iter()
        .map(|e| {
            let (l, r) = (mesh.left_face(e).unwrap(), mesh.right_face(e).unwrap());
            (e, values[l] - values[r])
        })
        .collect()
}

/// Parallelism defects `(Im F vs N_C*, Re F vs N_C)`: `Im dF(e_uv)` against
/// `N_C*(v) - N_C*(u)` and `Re dF(e_uv)` against `N_C(left) - N_C(right)`.
pub fn koebe_parallel_defects<T: Real>(
    f: &DualSurface<T>,
    mesh: &TriangulatedDisk,
    pair: &KoebePair<T>,
) -> Result<(T, T), MinimalError> {
    let im = interior_edge_jumps(mesh, &f.im());
    let re = interior_edge_jumps(mesh, &f.re());
    let primal: Vec<Vec3<T>> = im
        .iter()
        .map(|&(e, _)| {
            let (u, v) = mesh.edge(e);
            pair.n_cstar[v] - pair.n_cstar[u]
        })
        .collect();
    let dual = interior_edge_jumps(mesh, &pair.n_c);
    let a = check_reciprocal_parallel(&im.iter().map(|x| x.1).collect::<Vec<_>>(), &primal)?;
    let b = check_reciprocal_parallel(
        &re.iter().map(|x| x.1).collect::<Vec<_>>(),
        &dual.iter().map(|x| x.1).collect::<Vec<_>>(),
    )?;
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateDefects<T> {
    /// Max `|Im dF - Re dF x sigma(z)|`.
    pub rotation: T,
    /// Max `||Im dF| - |Re dF||`.
    pub length: T,
    /// Max `|dF|`.
    pub scale: T,
}

pub fn check_conjugate_pair<T: Real>(
    f: &DualSurface<T>,
    mesh: &TriangulatedDisk,
    z: &[C<T>],
) -> ConjugateDefects<T> {
    let mut out = ConjugateDefects {
        rotation: T::zero(),
        length: T::zero(),
        scale: T::zero(),
    };
    for e in mesh.interior_edges() {
        let d = f.values[mesh.left_face(e).unwrap()] - f.values[mesh.right_face(e).unwrap()];
        let (re, im) = (d.re(), d.im());
        let n = stereographic(z[e]);
        out.rotation = out.rotation.max((im - re.cross(n)).norm());
        out.length = out.length.max((im.norm() - re.norm()).abs());
        out.scale = out.scale.max(d.norm());
    }
    out
}

/// Faces of `G` around each interior vertex, in fan order.
pub fn koebe_dual_faces(mesh: &TriangulatedDisk) -> Vec<(usize, Vec<usize>)> {
    mesh.interior_vertices()
        .into_iter()
        .map(|u| (u, mesh.fans(u)[0].faces.clone()))
        .collect()
}

/// Faces of `TMG` around every closed or hinge medial vertex, in fan order.
/// Around a hinge vertex the chain closes across the edge of `G`.
pub fn general_dual_faces(m: &MedialComplex) -> Vec<(usize, Vec<usize>)> {
    let tmg = m.tmg();
    (0..tmg.vertex_count())
        .filter(|&i| m.vertex_kind(i) != MedialVertexKind::Open)
        .map(|i| {
            let faces = tmg.fans(i).iter().flat_map(|f| f.faces.clone()).collect();
            (i, faces)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Planarity<T> {
    /// Max distance from the best-fit plane over the face diameter.
    pub defect: T,
    pub normal: Vec3<T>,
    /// Angle between the fitted normal line and the hint.
    pub normal_angle: Option<T>,
    pub diameter: T,
}

pub fn face_planarity<T: Real>(
    points: &[Vec3<T>],
    hint: Option<Vec3<T>>,
) -> Result<Planarity<T>, MinimalError> {
    if points.len() < 3 {
        return Err(MinimalError::DegenerateFace(0));
    }
    let n = T::from_usize_lossy(points.len());
    let c = points.iter().fold(Vec3::zero(), |a, &p| a + p) / n;
    let mut diam = T::zero();
    for p in points {
        for q in points {
            diam = diam.max((*p - *q).norm());
        }
    }
    if !(diam > T::zero()) {
        return Err(MinimalError::DegenerateFace(0));
    }
    let mut cov = DMat::zeros(3, 3);
    for p in points {
        let d = ((*p - c) / diam).to_array();
        for r in 0..3 {
            for s in 0..3 {
                cov[(r, s)] += d[r] * d[s];
            }
        }
    }
    let (_, vecs) = symmetric_eigen(&cov);
    let normal = Vec3::new(vecs[0][0], vecs[0][1], vecs[0][2]);
    let defect = max_of(points.iter().map(|&p| (p - c).dot(normal).abs())) / diam;
    let normal_angle = hint
        .and_then(|h| h.normalized())
        .map(|h| normal.cross(h).norm().atan2(normal.dot(h).abs()));
    Ok(Planarity {
        defect,
        normal,
        normal_angle,
        diameter: diam,
    })
}

/// Koebe surface `F`, general surface `F-hat` from `q = koebe_to_general(lambda)`,
/// and the spread of `F-hat - F` over the faces of `G` relative to the
/// largest jump of `F`.
#[derive(Debug, Clone)]
pub struct Extension<T> {
    pub f: DualSurface<T>,
    pub f_hat: DualSurface<T>,
    pub q: GeneralQd<T>,
    pub restriction_defect: T,
}

pub fn extend_koebe_to_general<T: Real>(
    qd: &KoebeQd<T>,
    z: &[C<T>],
    m: &MedialComplex,
) -> Result<Extension<T>, MinimalError> {
    let f = weierstrass_koebe(qd, m.disk(), z)?;
    let q = koebe_to_general(qd, z, m)?.qd;
    let f_hat = weierstrass_general(&q, z, m)?;
    let nf = m.disk().face_count();
    let diffs: Vec<CVec3<T>> = (0..nf)
        .map(|g| f_hat.values[m.tmg_face_of_g_face(g)] - f.values[g])
        .collect();
    let mean = diffs
        .iter()
        .fold(CVec3::zero(), |a, &d| a + d)
        .scale(C::new(T::one() / T::from_usize_lossy(nf), T::zero()));
    let defect = max_of(diffs.iter().map(|&d| (d - mean).norm()));
    let scale = f.scale();
    let restriction_defect = if scale > T::zero() {
        defect / scale
    } else {
        defect
    };
    Ok(Extension {
        f,
        f_hat,
        q,
        restriction_defect,
    })
}

#[derive(Debug, Clone)]
pub struct KoebeFaceCurvature<T> {
    pub vertex: usize,
    pub mean_curvature: Vec3<T>,
    /// `|H| / (perimeter(Re F) max |N_C|)`, perimeters floored at
    /// `SCALE_FLOOR` times the largest one.
    pub relative: T,
}

#[derive(Debug, Clone)]
pub struct GeneralFaceCurvature<T> {
    pub medial_vertex: usize,
    /// Integrated mean curvature over the (floored) perimeter, on faces with
    /// all neighbours.
    pub relative_h: Option<T>,
    /// Planarity defect over the floored diameter.
    pub planarity: T,
    /// Zero on faces below the perimeter floor, whose normal is not defined.
    pub normal_angle: T,
}

/// All curvature and structure checks of the Koebe and general surfaces of one
/// Koebe-type differential on a lifted packing.
#[derive(Debug, Clone)]
pub struct CurvatureReport<T> {
    pub koebe_faces: Vec<KoebeFaceCurvature<T>>,
    pub general_faces: Vec<GeneralFaceCurvature<T>>,
    pub koebe_closedness: T,
    pub general_closedness: T,
    pub general_qd_residual: T,
    pub parallel_im_ncstar: T,
    pub parallel_re_nc: T,
    pub conjugate: ConjugateDefects<T>,
    pub restriction_defect: T,
    pub edge_tangency: T,
}

impl<T: Real> CurvatureReport<T> {
    pub fn max_koebe_curvature(&self) -> T {
        max_of(self.koebe_faces.iter().map(|f| f.relative))
    }

    pub fn max_general_curvature(&self) -> T {
        max_of(self.general_faces.iter().filter_map(|f| f.relative_h))
    }

    pub fn max_planarity(&self) -> T {
        max_of(self.general_faces.iter().map(|f| f.planarity))
    }

    pub fn max_normal_angle(&self) -> T {
        max_of(self.general_faces.iter().map(|f| f.normal_angle))
    }
}

/// Surfaces of one Koebe-type differential with their curvature report.
#[derive(Debug, Clone)]
pub struct MinimalSurfaces<T> {
    pub extension: Extension<T>,
    pub general_surface: PolySurface<T>,
    pub report: CurvatureReport<T>,
}

/// `z`, `lift` and `pair` must come from the same lifted packing.
pub fn minimal_surfaces<T: Real>(
    qd: &KoebeQd<T>,
    z: &[C<T>],
    m: &MedialComplex,
    lift: &SphericalLift<T>,
    pair: &KoebePair<T>,
) -> Result<MinimalSurfaces<T>, MinimalError> {
    let mesh = m.disk();
    let ext = extend_koebe_to_general(qd, z, m)?;
    let re = ext.f.re();
    let nmax = max_of(pair.n_c.iter().map(|n| n.norm()));
    let kdual = koebe_dual_faces(mesh);
    let kper: Vec<T> = kdual
        .iter()
        .map(|(_, faces)| perimeter(&faces.iter().map(|&g| re[g]).collect::<Vec<_>>()))
        .collect();
    let kfloor = max_of(kper.iter().copied()) * T::lit(SCALE_FLOOR);
    let koebe_faces = kdual
        .into_iter()
        .zip(kper)
        .map(|((u, faces), per)| {
            let f: Vec<Vec3<T>> = faces.iter().map(|&g| re[g]).collect();
            let n: Vec<Vec3<T>> = faces.iter().map(|&g| pair.n_c[g]).collect();
            let h = koebe_mean_curvature(&f, &n);
            let scale = per.max(kfloor) * nmax;
            let relative = if scale > T::zero() {
                h.norm() / scale
            } else {
                h.norm()
            };
            KoebeFaceCurvature {
                vertex: u,
                mean_curvature: h,
                relative,
            }
        })
        .collect();
    let dual = general_dual_faces(m);
    let surface = PolySurface::new(ext.f_hat.im(), dual.iter().map(|d| d.1.clone()).collect());
    let face_points =
        |faces: &[usize]| -> Vec<Vec3<T>> { faces.iter().map(|&f| surface.points[f]).collect() };
    let gper: Vec<T> = dual.iter().map(|d| perimeter(&face_points(&d.1))).collect();
    let gfloor = max_of(gper.iter().copied()) * T::lit(SCALE_FLOOR);
    let mut general_faces = Vec::new();
    for (k, (i, faces)) in dual.iter().enumerate() {
        if !(gper[k] > T::zero()) {
            continue;
        }
        let pl = face_planarity(&face_points(faces), Some(stereographic(z[*i])))?;
        let relative_h =
            if m.vertex_kind(*i) == MedialVertexKind::Closed && surface.is_closed_face(k) {
                Some(surface.mean_curvature(k)?.abs() / gper[k].max(gfloor))
            } else {
                None
            };
        let tiny = gper[k] < gfloor;
        general_faces.push(GeneralFaceCurvature {
            medial_vertex: *i,
            relative_h,
            planarity: pl.defect * pl.diameter / pl.diameter.max(gfloor),
            normal_angle: if tiny {
                T::zero()
            } else {
                pl.normal_angle.unwrap_or(T::zero())
            },
        });
    }
    let (parallel_im_ncstar, parallel_re_nc) = koebe_parallel_defects(&ext.f, mesh, pair)?;
    let report = CurvatureReport {
        koebe_faces,
        general_faces,
        koebe_closedness: ext.f.residual,
        general_closedness: ext.f_hat.residual,
        general_qd_residual: check_general_qd(&ext.q, z, m)?,
        parallel_im_ncstar,
        parallel_re_nc,
        conjugate: check_conjugate_pair(&ext.f, mesh, z),
        restriction_defect: ext.restriction_defect,
        edge_tangency: pair.tangency_residual(mesh, lift),
    };
    Ok(MinimalSurfaces {
        extension: ext,
        general_surface: surface,
        report,
    })
}
