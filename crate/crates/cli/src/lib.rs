//! Implementation of the `cpmin` subcommands. Each `cmd_*` function does the
//! work and returns a summary; `main` only parses arguments and prints.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use serde::Serialize;
use thiserror::Error;

use cpmin_core::differentials::{
    check_general_qd, check_koebe_qd, general_qd_basis, general_to_koebe, koebe_qd_basis,
    koebe_to_general,
};
use cpmin_core::harmonic::{sigma_dirichlet, sigma_to_koebe_qd};
use cpmin_core::io::{
    general_qd_from_file, general_qd_to_file, koebe_qd_from_file, koebe_qd_to_file, mesh_from_json,
    mesh_from_off, mesh_to_json, packing_from_json, packing_to_json, to_json, write_obj, ObjObject,
    PackingHeader, QdFile, QdType,
};
use cpmin_core::minimal::{general_dual_faces, koebe_dual_faces, minimal_surfaces, MinimalError};
use cpmin_core::packing::{koebe_polyhedra, normalize_for_lifting, solve_packing, PackingError};
use cpmin_core::report::{
    curvature_checks, sha256_hex, verify, Check, Tolerances, VerificationReport, VerifyOptions,
    GAUGES,
};
use cpmin_core::{
    hex_disk, CirclePacking, KoebeQd, MedialComplex, SolveOptions, TriangulatedDisk, C,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("NoConvergence: {0}")]
    NoConvergence(String),
    #[error("NotAQuadraticDifferential: residual {0:e}")]
    NotAQuadraticDifferential(f64),
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    CliError::Usage(msg.into()).into()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn load_mesh(path: &Path) -> Result<TriangulatedDisk> {
    let text = read(path)?;
    let is_off = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("off"));
    Ok(if is_off {
        mesh_from_off(&text)?
    } else {
        mesh_from_json(&text)?
    })
}

pub fn load_packing(path: &Path) -> Result<(CirclePacking<f64>, String)> {
    let text = read(path)?;
    let p = packing_from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((p, sha256_hex(text.as_bytes())))
}

pub fn cmd_generate(kind: &str, generations: usize, out: &Path) -> Result<TriangulatedDisk> {
    if kind != "hex" {
        return Err(usage(format!(
            "unknown mesh kind {kind:?} (expected \"hex\")"
        )));
    }
    if generations == 0 {
        return Err(usage("hex needs at least one generation"));
    }
    let mesh = hex_disk(generations)?;
    write(out, &mesh_to_json(&mesh)?)?;
    Ok(mesh)
}

/// Boundary radii (ascending boundary vertex order) from `uniform:<r>`, a JSON
/// array or a file holding one. Arrays may list all vertices or only the
/// boundary ones.
pub fn parse_radii(input: &str, mesh: &TriangulatedDisk) -> Result<Vec<f64>> {
    let boundary = mesh.boundary_vertices();
    if let Some(r) = input.strip_prefix("uniform:") {
        let r: f64 = r
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad radius in {input:?}")))?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(usage(format!("radius must be positive in {input:?}")));
        }
        return Ok(vec![r; boundary.len()]);
    }
    let text = if Path::new(input).is_file() {
        read(Path::new(input))?
    } else {
        input.to_string()
    };
    let values: Vec<f64> = serde_json::from_str(&text).map_err(|_| {
        usage(format!(
            "radii must be uniform:<r> or a JSON array, got {input:?}"
        ))
    })?;
    if values.len() == boundary.len() {
        Ok(values)
    } else if values.len() == mesh.vertex_count() {
        Ok(boundary.iter().map(|&v| values[v]).collect())
    } else {
        Err(usage(format!(
            "expected {} boundary radii or {} vertex radii, got {}",
            boundary.len(),
            mesh.vertex_count(),
            values.len()
        )))
    }
}

pub fn cmd_pack(mesh: &Path, radii: &str, out: &Path) -> Result<PackingHeader> {
    let mesh = load_mesh(mesh)?;
    let b = parse_radii(radii, &mesh)?;
    let (p, report) = match solve_packing(Arc::new(mesh), &b, SolveOptions::default()) {
        Ok(x) => x,
        Err(e @ PackingError::NoConvergence { .. }) => {
            return Err(CliError::NoConvergence(e.to_string()).into())
        }
        Err(PackingError::InvalidBoundaryData(m)) => return Err(usage(m)),
        Err(e) => return Err(e.into()),
    };
    let header = PackingHeader::from(&report);
    write(out, &packing_to_json(&p, Some(header.clone()))?)?;
    Ok(header)
}

/// Boundary values of `sigma` from `cos:<k>`, `sin:<k>` (in the angle of each
/// boundary center about the centroid of the centers) or a JSON array.
pub fn parse_sigma(input: &str, p: &CirclePacking<f64>) -> Result<Vec<f64>> {
    let boundary = p.mesh.boundary_vertices();
    let trig = |k: &str, f: fn(f64) -> f64| -> Result<Vec<f64>> {
        let k: f64 = k
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad frequency in {input:?}")))?;
        let n = p.centers.len() as f64;
        let mid = p.centers.iter().fold(C::new(0.0, 0.0), |a, &c| a + c) / n;
        Ok(boundary
            .iter()
            .map(|&v| f(k * (p.centers[v] - mid).arg()))
            .collect())
    };
    if let Some(k) = input.strip_prefix("cos:") {
        return trig(k, f64::cos);
    }
    if let Some(k) = input.strip_prefix("sin:") {
        return trig(k, f64::sin);
    }
    let values: Vec<f64> = serde_json::from_str(input).map_err(|_| {
        usage(format!(
            "sigma must be cos:<k>, sin:<k> or a JSON array, got {input:?}"
        ))
    })?;
    if values.len() != boundary.len() {
        return Err(usage(format!(
            "expected {} boundary values, got {}",
            boundary.len(),
            values.len()
        )));
    }
    Ok(values)
}

#[derive(Debug, Clone)]
pub enum QdAction {
    /// Writes `<prefix>_<k>.json` per basis element.
    Basis {
        prefix: PathBuf,
    },
    Check {
        file: PathBuf,
    },
    /// Differential of the harmonic deformation with the given boundary `sigma`.
    Sigma {
        input: String,
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct QdOutcome {
    pub dim: Option<usize>,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub files: Vec<PathBuf>,
}

impl QdOutcome {
    pub fn pass(&self) -> bool {
        match (self.residual, self.tolerance) {
            (Some(r), Some(t)) => r <= t,
            _ => true,
        }
    }
}

pub fn cmd_qd(
    packing: &Path,
    kind: QdType,
    action: &QdAction,
    tol: &Tolerances,
) -> Result<QdOutcome> {
    let (p, _) = load_packing(packing)?;
    let z = p.tangency_points();
    let m = MedialComplex::new(p.mesh.clone());
    let mut out = QdOutcome {
        dim: None,
        residual: None,
        tolerance: None,
        files: Vec::new(),
    };
    match action {
        QdAction::Basis { prefix } => {
            let files: Vec<QdFile> = match kind {
                QdType::Koebe => koebe_qd_basis(&p.mesh, &z, &p.centers, &p.radii)?
                    .iter()
                    .map(|b| koebe_qd_to_file(b, &p.mesh))
                    .collect(),
                QdType::General => general_qd_basis(&z, &m)?
                    .iter()
                    .map(|b| general_qd_to_file(b, &m))
                    .collect(),
            };
            out.dim = Some(files.len());
            for (k, f) in files.iter().enumerate() {
                let path = PathBuf::from(format!("{}_{k}.json", prefix.display()));
                write(&path, &to_json(f)?)?;
                out.files.push(path);
            }
        }
        QdAction::Check { file } => {
            let qd: QdFile = serde_json::from_str(&read(file)?)
                .with_context(|| format!("parsing {}", file.display()))?;
            if qd.kind != kind {
                return Err(usage(format!(
                    "{} is not a {kind:?}-type file",
                    file.display()
                )));
            }
            let (name, default, r) = match kind {
                QdType::Koebe => (
                    "qd.koebe_residual",
                    1e-10,
                    check_koebe_qd(&koebe_qd_from_file(&qd, &p.mesh)?, &p.mesh, &z)?,
                ),
                QdType::General => (
                    "qd.general_residual",
                    1e-9,
                    check_general_qd(&general_qd_from_file(&qd, &m)?, &z, &m)?,
                ),
            };
            out.residual = Some(r);
            out.tolerance = Some(tol.get(name, default));
        }
        QdAction::Sigma { input, out: path } => {
            let b = parse_sigma(input, &p)?;
            let sigma = sigma_dirichlet(&p, &b)?;
            let (lambda, _) = sigma_to_koebe_qd(&sigma, &p)?;
            let file = match kind {
                QdType::Koebe => koebe_qd_to_file(&lambda, &p.mesh),
                QdType::General => general_qd_to_file(&koebe_to_general(&lambda, &z, &m)?.qd, &m),
            };
            write(path, &to_json(&file)?)?;
            out.files.push(path.clone());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalReport {
    pub pass: bool,
    pub provenance: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone)]
pub struct MinimalOutcome {
    pub report: MinimalReport,
    pub files: Vec<PathBuf>,
}

fn koebe_from_file(
    file: &QdFile,
    p: &CirclePacking<f64>,
    m: &MedialComplex,
    tol: &Tolerances,
) -> Result<KoebeQd<f64>> {
    let z = p.tangency_points();
    match file.kind {
        QdType::Koebe => {
            let qd = koebe_qd_from_file(file, &p.mesh)?;
            let r = check_koebe_qd(&qd, &p.mesh, &z)?;
            if r.is_nan() || r > tol.get("qd.koebe_residual", 1e-8) {
                return Err(CliError::NotAQuadraticDifferential(r).into());
            }
            Ok(qd)
        }
        QdType::General => {
            let q = general_qd_from_file(file, m)?;
            let r = check_general_qd(&q, &z, m)?;
            if r.is_nan() || r > tol.get("qd.general_residual", 1e-8) {
                return Err(CliError::NotAQuadraticDifferential(r).into());
            }
            Ok(general_to_koebe(&q, &z, m)?.0)
        }
    }
}

pub fn cmd_minimal(
    packing: &Path,
    qd: &Path,
    prefix: &Path,
    tol: &Tolerances,
) -> Result<MinimalOutcome> {
    let (raw, packing_hash) = load_packing(packing)?;
    let qd_text = read(qd)?;
    let file: QdFile =
        serde_json::from_str(&qd_text).with_context(|| format!("parsing {}", qd.display()))?;
    let m0 = MedialComplex::new(raw.mesh.clone());
    let lambda = koebe_from_file(&file, &raw, &m0, tol)?;

    // lambda and q are invariant under the similarity applied here.
    let (p, lift) = normalize_for_lifting(&raw)?;
    let pair = koebe_polyhedra(&lift)?;
    let z = p.tangency_points();
    let m = MedialComplex::new(p.mesh.clone());
    let s = match minimal_surfaces(&lambda, &z, &m, &lift, &pair) {
        Ok(s) => s,
        Err(MinimalError::NotAQuadraticDifferential(r)) => {
            return Err(CliError::NotAQuadraticDifferential(r).into())
        }
        Err(e) => return Err(e.into()),
    };

    let mut warnings = Vec::new();
    if s.extension.f.scale() == 0.0 {
        warnings
            .push("ZeroSurface: the differential vanishes, every surface is a point".to_string());
    }
    let kfaces: Vec<Vec<usize>> = koebe_dual_faces(&p.mesh).into_iter().map(|x| x.1).collect();
    let gfaces: Vec<Vec<usize>> = general_dual_faces(&m).into_iter().map(|x| x.1).collect();
    let tris: Vec<Vec<usize>> = p.mesh.faces().iter().map(|f| f.to_vec()).collect();
    let objects = [
        ("ReF", s.extension.f.re(), &kfaces),
        ("ImF", s.extension.f.im(), &kfaces),
        ("ReFhat", s.extension.f_hat.re(), &gfaces),
        ("ImFhat", s.extension.f_hat.im(), &gfaces),
        ("N_C", pair.n_c.clone(), &kfaces),
        ("N_Cstar", pair.n_cstar.clone(), &tris),
    ];
    let comments = vec![
        format!("packing sha256 {packing_hash}"),
        format!("gauge: {GAUGES}"),
    ];
    let mut files = Vec::new();
    for (name, points, faces) in objects {
        let path = PathBuf::from(format!("{}_{name}.obj", prefix.display()));
        let obj = ObjObject {
            name: name.to_string(),
            points,
            faces: faces.clone(),
        };
        write(&path, &write_obj(&comments, &[obj]))?;
        files.push(path);
    }

    let mut checks = curvature_checks(&s.report, tol);
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let mut provenance = BTreeMap::new();
    provenance.insert("packing_sha256".to_string(), packing_hash);
    provenance.insert("qd_sha256".to_string(), sha256_hex(qd_text.as_bytes()));
    provenance.insert("gauges".to_string(), GAUGES.to_string());
    provenance.insert("tmg_fingerprint".to_string(), m.fingerprint());
    let report = MinimalReport {
        pass: checks.iter().all(|c| c.pass),
        provenance,
        warnings,
        checks,
    };
    let path = PathBuf::from(format!("{}_report.json", prefix.display()));
    write(&path, &to_json(&report)?)?;
    files.push(path);
    Ok(MinimalOutcome { report, files })
}

/// Runs the verification suite; the JSON report goes to `out` when given.
pub fn cmd_verify(
    packing: &Path,
    opts: &VerifyOptions,
    out: Option<&Path>,
) -> Result<(VerificationReport, String)> {
    let (p, hash) = load_packing(packing)?;
    let report = verify(&p, &hash, opts);
    let json = to_json(&report)?;
    if let Some(path) = out {
        write(path, &json)?;
    }
    Ok((report, json))
}

/// Pool size from `CPMIN_THREADS`; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("CPMIN_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(usage(format!(
                "CPMIN_THREADS must be a positive integer, got {s:?}"
            ))),
        },
    }
}

/// Exit status for an error: 2 for usage errors, 1 otherwise.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    match e.downcast_ref::<CliError>() {
        Some(CliError::Usage(_)) => 2,
        _ => 1,
    }
}
