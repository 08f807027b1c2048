//! Combinatorics of triangulated disks, medial graphs and their
//! triangulations, plus integration of closed 1-forms along spanning trees.
//!
//! Edges are identified by canonical sorted vertex pairs `(u, v)` with
//! `u < v`. The *left* face of an edge is the face that traverses `u -> v`,
//! the *right* face traverses `v -> u`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::ops::{Add, Deref, Neg, Sub};
use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geom::{CVec3, Vec3};
use crate::scalar::{Real, C};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeshError {
    #[error("not a disk: {0}")]
    NotADisk(String),
    #[error("edge {0}-{1} belongs to more than two faces")]
    NonManifoldEdge(usize, usize),
    #[error("faces traverse edge {0}-{1} in the same direction")]
    OrientationConflict(usize, usize),
    #[error("dual graph is disconnected")]
    DisconnectedDual,
    #[error("edge {0}-{1} is not a diagonal")]
    NotADiagonal(usize, usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Canonical (sorted) edge key.
#[inline]
pub fn edge_key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// The faces around one vertex, ordered counterclockwise.
///
/// For a closed fan with neighbors `n_0..n_{k-1}`, face `j` is
/// `(v, n_j, n_{j+1 mod k})`. For an open fan the neighbor list has one more
/// entry than the face list and face `j` is `(v, n_j, n_{j+1})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fan {
    pub neighbors: Vec<usize>,
    pub faces: Vec<usize>,
    pub closed: bool,
}

/// Oriented triangle complex with at most two faces per edge.
///
/// This is the common substrate of [`TriangulatedDisk`] and of the
/// triangulated medial graph, which need not be a manifold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangleComplex {
    vertex_count: usize,
    faces: Vec<[usize; 3]>,
    edges: Vec<(usize, usize)>,
    edge_index: BTreeMap<(usize, usize), usize>,
    edge_left: Vec<Option<usize>>,
    edge_right: Vec<Option<usize>>,
    face_edges: Vec<[usize; 3]>,
    fans: Vec<Vec<Fan>>,
}

impl TriangleComplex {
    /// Builds the complex, checking edge multiplicity and orientation.
    pub fn new(vertex_count: usize, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mut edge_left: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edge_right: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= vertex_count) {
                return Err(MeshError::InvalidInput(format!(
                    "face {fi} references a vertex outside 0..{vertex_count}"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MeshError::InvalidInput(format!("face {fi} is degenerate")));
            }
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = edge_key(a, b);
                let c = count.entry(key).or_insert(0);
                *c += 1;
                if *c > 2 {
                    return Err(MeshError::NonManifoldEdge(key.0, key.1));
                }
                let side = if a < b {
                    &mut edge_left
                } else {
                    &mut edge_right
                };
                if side.insert(key, fi).is_some() {
                    return Err(MeshError::OrientationConflict(key.0, key.1));
                }
            }
        }
        let edges: Vec<(usize, usize)> = count.keys().copied().collect();
        let edge_index: BTreeMap<(usize, usize), usize> =
            edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let face_edges = faces
            .iter()
            .map(|f| {
                [
                    edge_index[&edge_key(f[0], f[1])],
                    edge_index[&edge_key(f[1], f[2])],
                    edge_index[&edge_key(f[2], f[0])],
                ]
            })
            .collect();
        let fans = build_fans(vertex_count, &faces);
        Ok(Self {
            vertex_count,
            edge_left: edges.iter().map(|e| edge_left.get(e).copied()).collect(),
            edge_right: edges.iter().map(|e| edge_right.get(e).copied()).collect(),
            faces,
            edges,
            edge_index,
            face_edges,
            fans,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edge_index.get(&edge_key(u, v)).copied()
    }

    /// Face traversing the canonical edge `u -> v` (`u < v`).
    pub fn left_face(&self, e: usize) -> Option<usize> {
        self.edge_left[e]
    }

    /// Face traversing the canonical edge `v -> u`.
    pub fn right_face(&self, e: usize) -> Option<usize> {
        self.edge_right[e]
    }

    /// Face to the left of the directed edge `a -> b`.
    pub fn left_of(&self, a: usize, b: usize) -> Option<usize> {
        let e = self.edge_index(a, b)?;
        if a < b {
            self.edge_left[e]
        } else {
            self.edge_right[e]
        }
    }

    /// Edges of face `f` in the order `(f0 f1), (f1 f2), (f2 f0)`.
    pub fn face_edges(&self, f: usize) -> [usize; 3] {
        self.face_edges[f]
    }

    pub fn is_interior_edge(&self, e: usize) -> bool {
        self.edge_left[e].is_some() && self.edge_right[e].is_some()
    }

    pub fn interior_edges(&self) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.is_interior_edge(e))
            .collect()
    }

    pub fn fans(&self, v: usize) -> &[Fan] {
        &self.fans[v]
    }

    /// A vertex is interior when its star is a single closed fan.
    pub fn is_interior_vertex(&self, v: usize) -> bool {
        matches!(self.fans[v].as_slice(), [f] if f.closed)
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.vertex_count)
            .filter(|&v| self.is_interior_vertex(v))
            .collect()
    }

    /// Third vertex of face `f` opposite to the edge `{a, b}`.
    pub fn opposite(&self, f: usize, a: usize, b: usize) -> usize {
        let t = self.faces[f];
        *t.iter()
            .find(|&&x| x != a && x != b)
            .expect("edge belongs to face")
    }

    /// Neighbors of face `f` across interior edges.
    pub fn dual_neighbors(&self, f: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.face_edges[f].into_iter().filter_map(move |e| {
            let other = match (self.edge_left[e], self.edge_right[e]) {
                (Some(l), Some(r)) if l == f => r,
                (Some(l), Some(r)) if r == f => l,
                _ => return None,
            };
            Some((e, other))
        })
    }

    /// Breadth-first spanning tree of the dual graph rooted at face 0:
    /// `(face, parent face, edge)` in visiting order, root excluded.
    pub fn dual_spanning_tree(&self) -> Result<Vec<(usize, usize, usize)>, MeshError> {
        let n = self.faces.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n.saturating_sub(1));
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(f) = queue.pop_front() {
            for (e, g) in self.dual_neighbors(f) {
                if !seen[g] {
                    seen[g] = true;
                    order.push((g, f, e));
                    queue.push_back(g);
                }
            }
        }
        if order.len() + 1 != n {
            return Err(MeshError::DisconnectedDual);
        }
        Ok(order)
    }

    fn vertex_adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push((v, i));
            adj[v].push((u, i));
        }
        adj
    }

    /// Breadth-first spanning tree of the edge graph rooted at vertex 0:
    /// `(vertex, parent vertex, edge)` in visiting order, root excluded.
    pub fn primal_spanning_tree(&self) -> Result<Vec<(usize, usize, usize)>, MeshError> {
        let n = self.vertex_count;
        if n == 0 {
            return Ok(Vec::new());
        }
        let adj = self.vertex_adjacency();
        let mut seen = vec![false; n];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(w, e) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    order.push((w, v, e));
                    queue.push_back(w);
                }
            }
        }
        if order.len() + 1 != n {
            return Err(MeshError::NotADisk("edge graph is disconnected".into()));
        }
        Ok(order)
    }
}

fn build_fans(vertex_count: usize, faces: &[[usize; 3]]) -> Vec<Vec<Fan>> {
    // corner (v, a, b): face traverses v -> a -> b
    let mut corners: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); vertex_count];
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            corners[f[k]].push((f[(k + 1) % 3], f[(k + 2) % 3], fi));
        }
    }
    corners
        .into_iter()
        .map(|mut cs| {
            cs.sort_unstable();
            let mut used = vec![false; cs.len()];
            let mut fans = Vec::new();
            loop {
                let Some(start) = (0..cs.len()).find(|&i| !used[i]) else {
                    break;
                };
                // walk backwards to the beginning of an open fan
                let mut first = start;
                for _ in 0..cs.len() {
                    match cs.iter().position(|c| c.1 == cs[first].0) {
                        Some(p) if p == start => {
                            first = start;
                            break;
                        }
                        Some(p) => first = p,
                        None => break,
                    }
                }
                let mut neighbors = vec![cs[first].0];
                let mut fan_faces = Vec::new();
                let mut cur = first;
                let closed = loop {
                    used[cur] = true;
                    fan_faces.push(cs[cur].2);
                    let next_n = cs[cur].1;
                    match cs.iter().position(|c| c.0 == next_n) {
                        Some(p) if p == first => break true,
                        Some(p) if !used[p] => {
                            neighbors.push(next_n);
                            cur = p;
                        }
                        _ => {
                            neighbors.push(next_n);
                            break false;
                        }
                    }
                };
                fans.push(Fan {
                    neighbors,
                    faces: fan_faces,
                    closed,
                });
            }
            fans
        })
        .collect()
}

/// Validated oriented triangulated disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangulatedDisk {
    complex: TriangleComplex,
    boundary_cycle: Vec<usize>,
}

impl Deref for TriangulatedDisk {
    type Target = TriangleComplex;
    fn deref(&self) -> &TriangleComplex {
        &self.complex
    }
}

impl TriangulatedDisk {
    pub fn complex(&self) -> &TriangleComplex {
        &self.complex
    }

    /// Boundary vertices in counterclockwise order, starting at the lowest index.
    pub fn boundary_cycle(&self) -> &[usize] {
        &self.boundary_cycle
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.vertex_count())
            .filter(|&v| !self.is_interior_vertex(v))
            .collect()
    }

    /// Edge neighbourhood `(u, v, s, t)` of an interior edge: `(u, v, s)` is
    /// the left face and `(v, u, t)` the right face.
    pub fn edge_quad(&self, e: usize) -> Option<(usize, usize, usize, usize)> {
        let (u, v) = self.edge(e);
        let l = self.left_face(e)?;
        let r = self.right_face(e)?;
        Some((u, v, self.opposite(l, u, v), self.opposite(r, u, v)))
    }
}

/// Builds and validates a triangulated disk from counterclockwise faces.
pub fn build_disk(faces: &[[usize; 3]]) -> Result<TriangulatedDisk, MeshError> {
    if faces.is_empty() {
        return Err(MeshError::InvalidInput("empty face list".into()));
    }
    let vertex_count = faces.iter().flatten().max().map_or(0, |m| m + 1);
    let complex = TriangleComplex::new(vertex_count, faces.to_vec())?;
    for v in 0..vertex_count {
        match complex.fans(v).len() {
            0 => return Err(MeshError::NotADisk(format!("vertex {v} is unused"))),
            1 => {}
            _ => return Err(MeshError::NotADisk(format!("vertex {v} is singular"))),
        }
    }
    complex.primal_spanning_tree()?;
    let euler = vertex_count as i64 - complex.edge_count() as i64 + complex.face_count() as i64;
    if euler != 1 {
        return Err(MeshError::NotADisk(format!("Euler characteristic {euler}")));
    }
    // boundary edges directed as traversed by their face
    let mut next: BTreeMap<usize, usize> = BTreeMap::new();
    for e in 0..complex.edge_count() {
        if complex.is_interior_edge(e) {
            continue;
        }
        let (u, v) = complex.edge(e);
        let (a, b) = if complex.left_face(e).is_some() {
            (u, v)
        } else {
            (v, u)
        };
        if next.insert(a, b).is_some() {
            return Err(MeshError::NotADisk(format!(
                "boundary pinched at vertex {a}"
            )));
        }
    }
    let Some((&start, _)) = next.iter().next() else {
        return Err(MeshError::NotADisk("no boundary".into()));
    };
    let mut cycle = vec![start];
    let mut cur = next[&start];
    while cur != start {
        if cycle.len() > next.len() {
            return Err(MeshError::NotADisk("boundary is not a cycle".into()));
        }
        cycle.push(cur);
        cur = *next
            .get(&cur)
            .ok_or_else(|| MeshError::NotADisk("boundary is not a cycle".into()))?;
    }
    if cycle.len() != next.len() {
        return Err(MeshError::NotADisk("more than one boundary cycle".into()));
    }
    Ok(TriangulatedDisk {
        complex,
        boundary_cycle: cycle,
    })
}

/// Triangular-lattice disk with `generations` rings around vertex 0.
///
/// Vertices are ordered by ring, then counterclockwise by angle starting on
/// the positive real axis; [`hex_lattice_positions`] gives their lattice
/// coordinates.
pub fn hex_disk(generations: usize) -> Result<TriangulatedDisk, MeshError> {
    if generations == 0 {
        return Err(MeshError::InvalidInput(
            "generations must be positive".into(),
        ));
    }
    let axial = hex_axial(generations);
    let index: BTreeMap<(i64, i64), usize> =
        axial.iter().enumerate().map(|(i, &qr)| (qr, i)).collect();
    let mut faces = Vec::new();
    for &(q, r) in &axial {
        for tri in [
            [(q, r), (q + 1, r), (q, r + 1)],
            [(q, r), (q + 1, r - 1), (q + 1, r)],
        ] {
            if let (Some(&a), Some(&b), Some(&c)) =
                (index.get(&tri[0]), index.get(&tri[1]), index.get(&tri[2]))
            {
                faces.push([a, b, c]);
            }
        }
    }
    build_disk(&faces)
}

fn hex_axial(n: usize) -> Vec<(i64, i64)> {
    let n = n as i64;
    let mut pts = Vec::new();
    for q in -n..=n {
        for r in -n..=n {
            if q.abs().max(r.abs()).max((q + r).abs()) <= n {
                pts.push((q, r));
            }
        }
    }
    let angle = |(q, r): (i64, i64)| {
        let x = q as f64 + 0.5 * r as f64;
        let y = r as f64 * 3f64.sqrt() / 2.0;
        let a = y.atan2(x);
        if a < -1e-12 {
            a + std::f64::consts::TAU
        } else {
            a.max(0.0)
        }
    };
    let ring = |(q, r): (i64, i64)| q.abs().max(r.abs()).max((q + r).abs());
    pts.sort_by(|&a, &b| {
        ring(a)
            .cmp(&ring(b))
            .then(angle(a).partial_cmp(&angle(b)).unwrap())
    });
    pts
}

/// Lattice positions `q + r e^{i pi/3}` of the vertices of [`hex_disk`].
pub fn hex_lattice_positions<T: Real>(generations: usize) -> Vec<C<T>> {
    let half = T::lit(0.5);
    let h = T::lit(3f64.sqrt() / 2.0);
    hex_axial(generations)
        .into_iter()
        .map(|(q, r)| {
            let q = T::lit(q as f64);
            let r = T::lit(r as f64);
            C::new(q + half * r, h * r)
        })
        .collect()
}

/// Face of the medial graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MedialFace {
    /// Triangle of tangency points inside a face of `G`.
    Triangle { g_face: usize },
    /// Cyclic polygon of tangency points around an interior vertex of `G`,
    /// listed counterclockwise.
    Polygon { g_vertex: usize, cycle: Vec<usize> },
}

/// Position of a medial vertex relative to the triangulated medial graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MedialVertexKind {
    /// Both endpoints of the underlying edge are interior: closed star.
    Closed,
    /// Interior edge with exactly one boundary endpoint.
    Hinge,
    /// Boundary edge of `G`, or an interior edge with two boundary endpoints.
    Open,
}

/// Medial graph `MG` of a disk together with a triangulation `TMG`.
///
/// Medial vertex `i` is edge `i` of `G`. The first `F(G)` faces of `TMG` are
/// the triangles of the faces of `G` in the same order, so the injection
/// `F(G) -> F(TMG)` is the identity on indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MedialComplex {
    g: Arc<TriangulatedDisk>,
    faces: Vec<MedialFace>,
    /// Triangles of each polygon, parallel to the polygon faces in `faces`.
    polygon_triangles: Vec<Vec<[usize; 3]>>,
    tmg: TriangleComplex,
    diagonal: Vec<bool>,
}

impl MedialComplex {
    /// Medial complex with every polygon fan-triangulated from its
    /// lowest-index medial vertex.
    pub fn new(g: Arc<TriangulatedDisk>) -> Self {
        let mut faces: Vec<MedialFace> = (0..g.face_count())
            .map(|f| MedialFace::Triangle { g_face: f })
            .collect();
        let mut polygon_triangles = Vec::new();
        for u in g.interior_vertices() {
            let fan = &g.fans(u)[0];
            let cycle: Vec<usize> = fan
                .neighbors
                .iter()
                .map(|&n| g.edge_index(u, n).expect("neighbor edge"))
                .collect();
            polygon_triangles.push(fan_triangulation(&cycle));
            faces.push(MedialFace::Polygon { g_vertex: u, cycle });
        }
        Self::assemble(g, faces, polygon_triangles)
    }

    fn assemble(
        g: Arc<TriangulatedDisk>,
        faces: Vec<MedialFace>,
        mut polygon_triangles: Vec<Vec<[usize; 3]>>,
    ) -> Self {
        for tris in &mut polygon_triangles {
            for t in tris.iter_mut() {
                *t = rotate_min_first(*t);
            }
            tris.sort_unstable();
        }
        let mut tmg_faces: Vec<[usize; 3]> = (0..g.face_count())
            .map(|f| {
                let [a, b, c] = g.face(f);
                let e = |x, y| g.edge_index(x, y).expect("face edge");
                [e(a, b), e(b, c), e(c, a)]
            })
            .collect();
        tmg_faces.extend(polygon_triangles.iter().flatten().copied());
        let tmg = TriangleComplex::new(g.edge_count(), tmg_faces)
            .expect("medial triangulation is an oriented complex");
        let mut mg_edges: BTreeSet<(usize, usize)> = BTreeSet::new();
        for f in 0..g.face_count() {
            let t = tmg.face(f);
            for k in 0..3 {
                mg_edges.insert(edge_key(t[k], t[(k + 1) % 3]));
            }
        }
        let diagonal = tmg.edges().iter().map(|e| !mg_edges.contains(e)).collect();
        Self {
            g,
            faces,
            polygon_triangles,
            tmg,
            diagonal,
        }
    }

    pub fn disk(&self) -> &Arc<TriangulatedDisk> {
        &self.g
    }

    pub fn tmg(&self) -> &TriangleComplex {
        &self.tmg
    }

    pub fn medial_faces(&self) -> &[MedialFace] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.tmg.vertex_count()
    }

    /// Medial vertex of the edge `{u, v}` of `G`.
    pub fn medial_vertex_of_edge(&self, u: usize, v: usize) -> Option<usize> {
        self.g.edge_index(u, v)
    }

    /// Face of `TMG` corresponding to face `f` of `G`.
    pub fn tmg_face_of_g_face(&self, f: usize) -> usize {
        f
    }

    pub fn is_diagonal(&self, tmg_edge: usize) -> bool {
        self.diagonal[tmg_edge]
    }

    pub fn diagonals(&self) -> Vec<(usize, usize)> {
        self.tmg
            .edges()
            .iter()
            .zip(&self.diagonal)
            .filter(|(_, &d)| d)
            .map(|(&e, _)| e)
            .collect()
    }

    /// A medial vertex is interior iff its edge of `G` is interior.
    pub fn is_interior_medial_vertex(&self, i: usize) -> bool {
        self.g.is_interior_edge(i)
    }

    pub fn vertex_kind(&self, i: usize) -> MedialVertexKind {
        if !self.g.is_interior_edge(i) {
            return MedialVertexKind::Open;
        }
        let (u, v) = self.g.edge(i);
        match (self.g.is_interior_vertex(u), self.g.is_interior_vertex(v)) {
            (true, true) => MedialVertexKind::Closed,
            (false, false) => MedialVertexKind::Open,
            _ => MedialVertexKind::Hinge,
        }
    }

    /// Index of the polygon face in `medial_faces` owning TMG face `f`, if any.
    pub fn polygon_of_tmg_face(&self, f: usize) -> Option<usize> {
        let mut offset = self.g.face_count();
        for (p, tris) in self.polygon_triangles.iter().enumerate() {
            if f < offset + tris.len() {
                return (f >= offset).then_some(self.g.face_count() + p);
            }
            offset += tris.len();
        }
        None
    }

    /// Hex digest of the sorted diagonal list identifying the triangulation.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (a, b) in self.diagonals() {
            hasher.update(format!("{a}-{b};").as_bytes());
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Flips a diagonal inside its polygon.
    pub fn flip_diagonal(&self, a: usize, b: usize) -> Result<Self, MeshError> {
        let e = self
            .tmg
            .edge_index(a, b)
            .filter(|&e| self.diagonal[e])
            .ok_or(MeshError::NotADiagonal(a, b))?;
        let (a, b) = self.tmg.edge(e);
        let f1 = self.tmg.left_face(e).ok_or(MeshError::NotADiagonal(a, b))?;
        let f2 = self
            .tmg
            .right_face(e)
            .ok_or(MeshError::NotADiagonal(a, b))?;
        let c = self.tmg.opposite(f1, a, b);
        let d = self.tmg.opposite(f2, a, b);
        let p = self
            .polygon_of_tmg_face(f1)
            .ok_or(MeshError::NotADiagonal(a, b))?
            - self.g.face_count();
        let mut polys = self.polygon_triangles.clone();
        let tris = &mut polys[p];
        let old1 = rotate_min_first([a, b, c]);
        let old2 = rotate_min_first([b, a, d]);
        tris.retain(|t| *t != old1 && *t != old2);
        tris.push([d, b, c]);
        tris.push([c, a, d]);
        Ok(Self::assemble(self.g.clone(), self.faces.clone(), polys))
    }

    /// Triangles of every polygon face, in polygon order.
    pub fn polygon_triangulations(&self) -> &[Vec<[usize; 3]>] {
        &self.polygon_triangles
    }
}

fn rotate_min_first(t: [usize; 3]) -> [usize; 3] {
    let k = (0..3).min_by_key(|&k| t[k]).unwrap();
    [t[k], t[(k + 1) % 3], t[(k + 2) % 3]]
}

fn fan_triangulation(cycle: &[usize]) -> Vec<[usize; 3]> {
    let k = cycle.len();
    let r = (0..k).min_by_key(|&i| cycle[i]).unwrap();
    (1..k - 1)
        .map(|j| [cycle[r], cycle[(r + j) % k], cycle[(r + j + 1) % k]])
        .collect()
}

/// Values of a 1-form: anything that can be added, subtracted and measured.
pub trait OneFormValue<T: Real>:
    Copy + Add<Output = Self> + Sub<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> T;
}

impl<T: Real> OneFormValue<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn magnitude(&self) -> T {
        self.abs()
    }
}

impl<T: Real> OneFormValue<T> for C<T> {
    fn zero() -> Self {
        C::new(T::zero(), T::zero())
    }
    fn magnitude(&self) -> T {
        self.norm()
    }
}

impl<T: Real> OneFormValue<T> for Vec3<T> {
    fn zero() -> Self {
        Vec3::zero()
    }
    fn magnitude(&self) -> T {
        self.norm()
    }
}

impl<T: Real> OneFormValue<T> for CVec3<T> {
    fn zero() -> Self {
        CVec3::zero()
    }
    fn magnitude(&self) -> T {
        self.norm()
    }
}

/// Result of integrating a closed 1-form along a spanning tree.
#[derive(Debug, Clone)]
pub struct Integral<T, V> {
    pub values: Vec<V>,
    /// Magnitude of the cycle sum around each elementary cycle.
    pub cycle_sums: Vec<T>,
    pub max_cycle_residual: T,
}

/// Integrates a dual 1-form given per edge index as
/// `omega[e] = g(left(e)) - g(right(e))`; values on boundary edges are ignored.
///
/// Face 0 receives the zero value. Cycle sums are reported around every
/// interior vertex.
pub fn integrate_dual_one_form<T: Real, V: OneFormValue<T>>(
    cx: &TriangleComplex,
    omega: &[V],
) -> Result<Integral<T, V>, MeshError> {
    assert_eq!(omega.len(), cx.edge_count());
    let tree = cx.dual_spanning_tree()?;
    let mut values = vec![V::zero(); cx.face_count()];
    for (g, parent, e) in tree {
        values[g] = if cx.left_face(e) == Some(parent) {
            values[parent] - omega[e]
        } else {
            values[parent] + omega[e]
        };
    }
    let cycle_sums: Vec<T> = cx
        .interior_vertices()
        .into_iter()
        .map(|v| dual_cycle_sum(cx, omega, v).magnitude())
        .collect();
    let max_cycle_residual = crate::scalar::max_of(cycle_sums.iter().copied());
    Ok(Integral {
        values,
        cycle_sums,
        max_cycle_residual,
    })
}

/// Sum of `omega` over the directed edges `v -> n` around an interior vertex.
pub fn dual_cycle_sum<T: Real, V: OneFormValue<T>>(
    cx: &TriangleComplex,
    omega: &[V],
    v: usize,
) -> V {
    let fan = &cx.fans(v)[0];
    fan.neighbors.iter().fold(V::zero(), |acc, &n| {
        let e = cx.edge_index(v, n).expect("fan edge");
        if v < n {
            acc + omega[e]
        } else {
            acc - omega[e]
        }
    })
}

/// Integrates a primal 1-form given per edge index as
/// `omega[e] = g(v) - g(u)` for the canonical edge `(u, v)`.
///
/// Vertex 0 receives the zero value. Cycle sums are reported around every face.
pub fn integrate_primal_one_form<T: Real, V: OneFormValue<T>>(
    cx: &TriangleComplex,
    omega: &[V],
) -> Result<Integral<T, V>, MeshError> {
    assert_eq!(omega.len(), cx.edge_count());
    let tree = cx.primal_spanning_tree()?;
    let mut values = vec![V::zero(); cx.vertex_count()];
    for (w, parent, e) in tree {
        values[w] = if parent < w {
            values[parent] + omega[e]
        } else {
            values[parent] - omega[e]
        };
    }
    let cycle_sums: Vec<T> = (0..cx.face_count())
        .map(|f| {
            let t = cx.face(f);
            (0..3)
                .fold(V::zero(), |acc, k| {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    let e = cx.edge_index(a, b).expect("face edge");
                    if a < b {
                        acc + omega[e]
                    } else {
                        acc - omega[e]
                    }
                })
                .magnitude()
        })
        .collect();
    let max_cycle_residual = crate::scalar::max_of(cycle_sums.iter().copied());
    Ok(Integral {
        values,
        cycle_sums,
        max_cycle_residual,
    })
}
