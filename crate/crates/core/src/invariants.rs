//! Cross ratios of packings and patterns, the tangent form `omega`, and
//! extraction of vertex rotations between two realizations of the medial graph.

use thiserror::Error;

use crate::mesh::{MedialComplex, TriangleComplex, TriangulatedDisk};
use crate::packing::CirclePacking;
use crate::scalar::{wrap_angle, Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum InvariantError {
    #[error("degenerate quadruple in cross ratio")]
    DegenerateQuadruple,
    #[error("realizations are not related by a vertex rotation (residual {0:e})")]
    InconsistentRotation(f64),
    #[error("rotation system has no odd cycle")]
    BipartiteAmbiguity,
}

/// `(a - b)(c - d) / ((b - c)(d - a))`.
pub fn cross_ratio<T: Real>(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> Result<C<T>, InvariantError> {
    let den = (b - c) * (d - a);
    if den.norm() == T::zero() {
        return Err(InvariantError::DegenerateQuadruple);
    }
    Ok((a - b) * (c - d) / den)
}

/// Logarithmic derivative of [`cross_ratio`] along the velocities `da..dd`.
pub fn cross_ratio_log_derivative<T: Real>(p: [C<T>; 4], dp: [C<T>; 4]) -> C<T> {
    let [a, b, c, d] = p;
    let [da, db, dc, dd] = dp;
    (da - db) / (a - b) - (db - dc) / (b - c) + (dc - dd) / (c - d) - (dd - da) / (d - a)
}

/// Tangency points around an interior edge `{u, v}` of `G`, as medial
/// vertex indices: `i` on the edge itself, `j = {v,s}`, `k = {s,u}` from the
/// left face `(u, v, s)`, and `m = {u,t}`, `n = {v,t}` from the right face
/// `(v, u, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeStar {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub m: usize,
    pub n: usize,
}

pub fn edge_star(mesh: &TriangulatedDisk, e: usize) -> Option<EdgeStar> {
    let (u, v, s, t) = mesh.edge_quad(e)?;
    let idx = |a, b| mesh.edge_index(a, b).expect("edge of a face");
    Some(EdgeStar {
        i: e,
        j: idx(v, s),
        k: idx(s, u),
        m: idx(u, t),
        n: idx(v, t),
    })
}

impl EdgeStar {
    fn points<T: Real>(&self, z: &[C<T>]) -> [C<T>; 5] {
        [z[self.i], z[self.j], z[self.k], z[self.m], z[self.n]]
    }
}

/// Per-edge complex values on the interior edges of a complex.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeValues<T> {
    /// Indexed by edge; `None` on boundary edges.
    pub values: Vec<Option<C<T>>>,
    /// Max relative disagreement of the two defining expressions.
    pub consistency: T,
}

impl<T: Real> EdgeValues<T> {
    pub fn interior(&self) -> impl Iterator<Item = (usize, C<T>)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(e, v)| v.map(|v| (e, v)))
    }
}

/// `cr(z_i, z_j, z_k, z_m)`, checked against `cr(z_i, z_m, z_n, z_j)`.
pub fn packing_cross_ratios_from_points<T: Real>(
    mesh: &TriangulatedDisk,
    z: &[C<T>],
) -> Result<EdgeValues<T>, InvariantError> {
    let mut values = vec![None; mesh.edge_count()];
    let mut consistency = T::zero();
    for e in mesh.interior_edges() {
        let st = edge_star(mesh, e).expect("interior edge");
        let [zi, zj, zk, zm, zn] = st.points(z);
        let a = cross_ratio(zi, zj, zk, zm)?;
        let b = cross_ratio(zi, zm, zn, zj)?;
        consistency = consistency.max((a - b).norm() / a.norm());
        values[e] = Some(a);
    }
    Ok(EdgeValues {
        values,
        consistency,
    })
}

pub fn packing_cross_ratios<T: Real>(
    p: &CirclePacking<T>,
) -> Result<EdgeValues<T>, InvariantError> {
    packing_cross_ratios_from_points(&p.mesh, &p.tangency_points())
}

/// Left and right third vertices `(k, l)` of an interior edge `(i, j)` of a
/// triangle complex, with `{i, j, k}` left of `i -> j`.
pub fn edge_wings(cx: &TriangleComplex, e: usize) -> Option<(usize, usize, usize, usize)> {
    let (i, j) = cx.edge(e);
    let l = cx.left_face(e)?;
    let r = cx.right_face(e)?;
    Some((i, j, cx.opposite(l, i, j), cx.opposite(r, i, j)))
}

/// `cr(z_j, z_k, z_i, z_l)` per interior edge of `TMG`.
pub fn pattern_cross_ratios<T: Real>(
    z: &[C<T>],
    m: &MedialComplex,
) -> Result<EdgeValues<T>, InvariantError> {
    let tmg = m.tmg();
    let mut values = vec![None; tmg.edge_count()];
    for e in tmg.interior_edges() {
        let (i, j, k, l) = edge_wings(tmg, e).expect("interior edge");
        values[e] = Some(cross_ratio(z[j], z[k], z[i], z[l])?);
    }
    Ok(EdgeValues {
        values,
        consistency: T::zero(),
    })
}

/// `omega(e_uv) = (z_k - z_i)(z_m - z_i) / (z_m - z_k)` on the canonical
/// orientation `u < v`, checked against `(z_j - z_i)(z_n - z_i) / (z_n - z_j)`.
pub fn omega_form_from_points<T: Real>(
    mesh: &TriangulatedDisk,
    z: &[C<T>],
) -> Result<EdgeValues<T>, InvariantError> {
    let mut values = vec![None; mesh.edge_count()];
    let mut consistency = T::zero();
    for e in mesh.interior_edges() {
        let st = edge_star(mesh, e).expect("interior edge");
        let [zi, zj, zk, zm, zn] = st.points(z);
        if (zm - zk).norm() == T::zero() || (zn - zj).norm() == T::zero() {
            return Err(InvariantError::DegenerateQuadruple);
        }
        let a = (zk - zi) * (zm - zi) / (zm - zk);
        let b = (zj - zi) * (zn - zi) / (zn - zj);
        consistency = consistency.max((a - b).norm() / a.norm());
        values[e] = Some(a);
    }
    Ok(EdgeValues {
        values,
        consistency,
    })
}

pub fn omega_form<T: Real>(p: &CirclePacking<T>) -> Result<EdgeValues<T>, InvariantError> {
    omega_form_from_points(&p.mesh, &p.tangency_points())
}

/// `omega` on the directed edge `a -> b`.
pub fn omega_directed<T: Real>(
    omega: &EdgeValues<T>,
    mesh: &TriangulatedDisk,
    a: usize,
    b: usize,
) -> Option<C<T>> {
    let w = omega.values[mesh.edge_index(a, b)?]?;
    Some(if a < b { w } else { -w })
}

/// Vertex rotation angles relating two realizations of `TMG`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexRotation<T> {
    /// Angle per medial vertex in `(-pi, pi]`.
    pub alpha: Vec<T>,
    /// Max wrapped deviation of `alpha_i + alpha_j` from the edge rotation.
    pub residual: T,
}

/// Solves `alpha_i + alpha_j = Arg((zt_j - zt_i) / (z_j - z_i))` mod `2 pi` on
/// every edge of `TMG`. The ambiguity `alpha -> alpha + pi` is fixed by
/// taking `alpha_0` in `[0, pi)`.
pub fn extract_vertex_rotation<T: Real>(
    z: &[C<T>],
    zt: &[C<T>],
    m: &MedialComplex,
    tol: T,
) -> Result<VertexRotation<T>, InvariantError> {
    let tmg = m.tmg();
    let theta: Vec<T> = tmg
        .edges()
        .iter()
        .map(|&(i, j)| ((zt[j] - zt[i]) / (z[j] - z[i])).arg())
        .collect();
    let tree = tmg
        .primal_spanning_tree()
        .map_err(|_| InvariantError::BipartiteAmbiguity)?;
    let n = tmg.vertex_count();
    // alpha_v = sign[v] * alpha_0 + offset[v]
    let mut sign = vec![0i8; n];
    let mut offset = vec![T::zero(); n];
    sign[0] = 1;
    let mut in_tree = vec![false; tmg.edge_count()];
    for &(w, parent, e) in &tree {
        in_tree[e] = true;
        sign[w] = -sign[parent];
        offset[w] = wrap_angle(theta[e] - offset[parent]);
    }
    let odd = (0..tmg.edge_count()).find(|&e| {
        let (i, j) = tmg.edge(e);
        !in_tree[e] && sign[i] == sign[j]
    });
    let Some(e) = odd else {
        return Err(InvariantError::BipartiteAmbiguity);
    };
    let (i, j) = tmg.edge(e);
    let s = T::lit(sign[i] as f64);
    let mut a0 = wrap_angle(theta[e] - offset[i] - offset[j]) * s / T::lit(2.0);
    if a0 < T::zero() {
        a0 += T::PI();
    }
    if a0 >= T::PI() {
        a0 -= T::PI();
    }
    let alpha: Vec<T> = (0..n)
        .map(|v| wrap_angle(T::lit(sign[v] as f64) * a0 + offset[v]))
        .collect();
    let residual = tmg
        .edges()
        .iter()
        .zip(&theta)
        .fold(T::zero(), |acc, (&(i, j), &t)| {
            acc.max(wrap_angle(alpha[i] + alpha[j] - t).abs())
        });
    if !(residual <= tol) {
        return Err(InvariantError::InconsistentRotation(
            residual.to_f64_lossy(),
        ));
    }
    Ok(VertexRotation { alpha, residual })
}
