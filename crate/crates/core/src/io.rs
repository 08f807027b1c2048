//! File formats: meshes (JSON, OFF), packings and quadratic differentials
//! (JSON) and surfaces (OBJ). Floats are written with 17 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::differentials::{GeneralQd, KoebeQd};
use crate::geom::Vec3;
use crate::mesh::{build_disk, MedialComplex, MeshError, TriangulatedDisk};
use crate::packing::{CirclePacking, SolveReport};
use crate::scalar::C;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Compact JSON with every float printed as `d.dddddddddddddddde±x`.
pub fn to_json<S: Serialize>(value: &S) -> Result<String, IoError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub faces: Vec<[usize; 3]>,
}

pub fn mesh_to_json(mesh: &TriangulatedDisk) -> Result<String, IoError> {
    to_json(&MeshFile {
        faces: mesh.faces().to_vec(),
    })
}

pub fn mesh_from_json(text: &str) -> Result<TriangulatedDisk, IoError> {
    let file: MeshFile = serde_json::from_str(text)?;
    Ok(build_disk(&file.faces)?)
}

/// Reads the faces of an OFF file; vertex coordinates are skipped.
pub fn mesh_from_off(text: &str) -> Result<TriangulatedDisk, IoError> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let bad = |m: &str| IoError::Format(m.to_string());
    let head = lines.next().ok_or_else(|| bad("empty OFF file"))?;
    let counts = match head.strip_prefix("OFF") {
        Some(rest) if !rest.trim().is_empty() => rest.trim().to_string(),
        Some(_) => lines
            .next()
            .ok_or_else(|| bad("missing OFF counts"))?
            .to_string(),
        None => return Err(bad("missing OFF header")),
    };
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad("bad OFF counts")))
        .collect::<Result<_, _>>()?;
    let (nv, nf) = match nums.as_slice() {
        [v, f, ..] => (*v, *f),
        _ => return Err(bad("bad OFF counts")),
    };
    for _ in 0..nv {
        lines.next().ok_or_else(|| bad("truncated vertex list"))?;
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let line = lines.next().ok_or_else(|| bad("truncated face list"))?;
        let idx: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad face index")))
            .collect::<Result<_, _>>()?;
        match idx.as_slice() {
            [3, a, b, c, ..] => faces.push([*a, *b, *c]),
            _ => return Err(bad("only triangular faces are supported")),
        }
    }
    Ok(build_disk(&faces)?)
}

/// Solver residuals stored alongside a packing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingHeader {
    pub iterations: usize,
    pub max_angle_error: f64,
    pub tangency_residual: f64,
}

impl From<&SolveReport<f64>> for PackingHeader {
    fn from(r: &SolveReport<f64>) -> Self {
        Self {
            iterations: r.iterations,
            max_angle_error: r.max_angle_error,
            tangency_residual: r.tangency_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header: Option<PackingHeader>,
    pub centers: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
    pub faces: Vec<[usize; 3]>,
}

pub fn packing_to_json(
    p: &CirclePacking<f64>,
    header: Option<PackingHeader>,
) -> Result<String, IoError> {
    to_json(&PackingFile {
        header,
        centers: p.centers.iter().map(|c| [c.re, c.im]).collect(),
        radii: p.radii.clone(),
        faces: p.mesh.faces().to_vec(),
    })
}

pub fn packing_from_json(text: &str) -> Result<CirclePacking<f64>, IoError> {
    let file: PackingFile = serde_json::from_str(text)?;
    let mesh = build_disk(&file.faces)?;
    if file.centers.len() != mesh.vertex_count() || file.radii.len() != mesh.vertex_count() {
        return Err(IoError::Format(format!(
            "expected {} centers and radii",
            mesh.vertex_count()
        )));
    }
    Ok(CirclePacking::new(
        Arc::new(mesh),
        file.centers.iter().map(|&[x, y]| C::new(x, y)).collect(),
        file.radii,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QdType {
    Koebe,
    General,
}

/// Edge values keyed `"u-v"` with `u < v`; vertices of `G` for the Koebe type,
/// medial vertices (edge indices of `G`) for the general type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QdFile {
    #[serde(rename = "type")]
    pub kind: QdType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    pub edges: BTreeMap<String, f64>,
}

fn key(u: usize, v: usize) -> String {
    format!("{}-{}", u.min(v), u.max(v))
}

fn parse_key(k: &str) -> Result<(usize, usize), IoError> {
    let (a, b) = k
        .split_once('-')
        .ok_or_else(|| IoError::Format(format!("bad edge key {k:?}")))?;
    let p = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| IoError::Format(format!("bad edge key {k:?}")))
    };
    let (a, b) = (p(a)?, p(b)?);
    Ok((a.min(b), a.max(b)))
}

fn collect_values(
    file: &QdFile,
    interior: &[usize],
    edges: &[(usize, usize)],
) -> Result<Vec<f64>, IoError> {
    let mut vals = BTreeMap::new();
    for (k, &v) in &file.edges {
        vals.insert(parse_key(k)?, v);
    }
    let out: Vec<f64> = interior
        .iter()
        .map(|&e| vals.remove(&edges[e]).unwrap_or(0.0))
        .collect();
    if let Some((&(a, b), _)) = vals.iter().next() {
        return Err(IoError::Format(format!("{a}-{b} is not an interior edge")));
    }
    Ok(out)
}

pub fn koebe_qd_to_file(qd: &KoebeQd<f64>, mesh: &TriangulatedDisk) -> QdFile {
    QdFile {
        kind: QdType::Koebe,
        fingerprint: None,
        edges: mesh
            .interior_edges()
            .into_iter()
            .zip(&qd.lambda)
            .map(|(e, &v)| {
                let (a, b) = mesh.edge(e);
                (key(a, b), v)
            })
            .collect(),
    }
}

pub fn general_qd_to_file(qd: &GeneralQd<f64>, m: &MedialComplex) -> QdFile {
    let tmg = m.tmg();
    QdFile {
        kind: QdType::General,
        fingerprint: Some(m.fingerprint()),
        edges: tmg
            .interior_edges()
            .into_iter()
            .zip(&qd.q)
            .map(|(e, &v)| {
                let (a, b) = tmg.edge(e);
                (key(a, b), v)
            })
            .collect(),
    }
}

pub fn koebe_qd_from_file(file: &QdFile, mesh: &TriangulatedDisk) -> Result<KoebeQd<f64>, IoError> {
    if file.kind != QdType::Koebe {
        return Err(IoError::Format("expected a koebe-type differential".into()));
    }
    Ok(KoebeQd {
        lambda: collect_values(file, &mesh.interior_edges(), mesh.edges())?,
    })
}

pub fn general_qd_from_file(file: &QdFile, m: &MedialComplex) -> Result<GeneralQd<f64>, IoError> {
    if file.kind != QdType::General {
        return Err(IoError::Format(
            "expected a general-type differential".into(),
        ));
    }
    if let Some(fp) = &file.fingerprint {
        if *fp != m.fingerprint() {
            return Err(IoError::Format(
                "medial triangulation fingerprint mismatch".into(),
            ));
        }
    }
    let tmg = m.tmg();
    Ok(GeneralQd {
        q: collect_values(file, &tmg.interior_edges(), tmg.edges())?,
    })
}

/// One named object of an OBJ file; faces index into `points`.
#[derive(Debug, Clone)]
pub struct ObjObject {
    pub name: String,
    pub points: Vec<Vec3<f64>>,
    pub faces: Vec<Vec<usize>>,
}

/// OBJ text with `#` comment lines, one `o` block per object and 1-based
/// indices running across objects.
pub fn write_obj(comments: &[String], objects: &[ObjObject]) -> String {
    let mut out = String::new();
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    let mut offset = 1;
    for obj in objects {
        let _ = writeln!(out, "o {}", obj.name);
        for p in &obj.points {
            let _ = writeln!(out, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
        }
        for f in &obj.faces {
            out.push('f');
            for &v in f {
                let _ = write!(out, " {}", v + offset);
            }
            out.push('\n');
        }
        offset += obj.points.len();
    }
    out
}

/// Vertex positions of every object in an OBJ file, by object name.
pub fn read_obj_points(text: &str) -> Result<Vec<(String, Vec<Vec3<f64>>)>, IoError> {
    let mut out: Vec<(String, Vec<Vec3<f64>>)> = Vec::new();
    for line in text.lines() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("o") => out.push((it.collect::<Vec<_>>().join(" "), Vec::new())),
            Some("v") => {
                let c: Vec<f64> = it
                    .map(|t| {
                        t.parse()
                            .map_err(|_| IoError::Format(format!("bad vertex line {line:?}")))
                    })
                    .collect::<Result<_, _>>()?;
                if c.len() < 3 {
                    return Err(IoError::Format(format!("bad vertex line {line:?}")));
                }
                if out.is_empty() {
                    out.push((String::new(), Vec::new()));
                }
                out.last_mut().unwrap().1.push(Vec3::new(c[0], c[1], c[2]));
            }
            _ => {}
        }
    }
    Ok(out)
}
