//! Verification suites over a packing. Each check yields a residual that is
//! compared with a tolerance; checks run on the current rayon pool and are
//! reported sorted by name.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::differentials::{
    check_general_qd, check_koebe_qd, general_qd_basis, general_to_koebe, koebe_qd_basis,
    koebe_qd_from_velocity, koebe_to_general, KoebeQd,
};
use crate::harmonic::{
    check_alpha_harmonic, cot_weights, deformation_from_sigma, face_radius, realized_cot_weights,
    sigma_dirichlet, sigma_harmonic_basis, sigma_to_koebe_qd,
};
use crate::invariants::{
    extract_vertex_rotation, omega_form, packing_cross_ratios, pattern_cross_ratios,
};
use crate::mesh::MedialComplex;
use crate::minimal::{minimal_surfaces, CurvatureReport};
use crate::moebius::{moebius_image_packing, InfMoebius, MoebiusMap};
use crate::packing::{
    koebe_polyhedra, normalize_for_lifting, solve_packing, stereographic, CirclePacking, KoebePair,
    SolveOptions, SphericalLift,
};
use crate::scalar::{max_of, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Invariants,
    Harmonic,
    Minimal,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(Suite::All),
            "invariants" => Ok(Suite::Invariants),
            "harmonic" => Ok(Suite::Harmonic),
            "minimal" => Ok(Suite::Minimal),
            _ => Err(format!("unknown suite {s:?}")),
        }
    }
}

/// Tolerance overrides: a global value and per-check values by name.
#[derive(Debug, Clone, Default)]
pub struct Tolerances {
    pub global: Option<f64>,
    pub by_name: BTreeMap<String, f64>,
}

impl Tolerances {
    pub fn get(&self, name: &str, default: f64) -> f64 {
        self.by_name
            .get(name)
            .copied()
            .or(self.global)
            .unwrap_or(default)
    }

    /// Parses `<value>` or `<check-name>=<value>`.
    pub fn add(&mut self, input: &str) -> Result<(), String> {
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| *x >= 0.0)
                .ok_or_else(|| format!("bad tolerance {input:?}"))
        };
        match input.split_once('=') {
            Some((name, v)) => {
                self.by_name.insert(name.trim().to_string(), parse(v)?);
            }
            None => self.global = Some(parse(input)?),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    /// `null` when the check could not be evaluated.
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl Check {
    pub fn new(name: &str, result: Result<f64, String>, tolerance: f64) -> Self {
        let (residual, error) = match result {
            Ok(r) => (r, None),
            Err(e) => (f64::NAN, Some(e)),
        };
        Self {
            name: name.to_string(),
            residual,
            tolerance,
            pass: residual <= tolerance,
            error,
            wall_ms: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub suite: Suite,
    pub seed: u64,
    pub provenance: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(
        suite: Suite,
        seed: u64,
        provenance: BTreeMap<String, String>,
        warnings: Vec<String>,
        mut checks: Vec<Check>,
    ) -> Self {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        Self {
            pass: checks.iter().all(|c| c.pass),
            suite,
            seed,
            provenance,
            warnings,
            checks,
        }
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub suite: Suite,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub timings: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            suite: Suite::All,
            seed: 0,
            tolerances: Tolerances::default(),
            timings: false,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub const GAUGES: &str =
    "Phi, Phi-hat, F, F-hat zero on face 0; cdot zero at vertex 0; eta zero on face 0";

type Res = Result<f64, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Lifted {
    p: CirclePacking<f64>,
    z: Vec<C<f64>>,
    lift: SphericalLift<f64>,
    pair: KoebePair<f64>,
    basis: Vec<KoebeQd<f64>>,
}

/// Data shared by the checks, computed on first use.
struct Ctx {
    p: CirclePacking<f64>,
    z: Vec<C<f64>>,
    m: MedialComplex,
    seed: u64,
    basis: OnceLock<Result<Vec<KoebeQd<f64>>, String>>,
    lifted: OnceLock<Result<Lifted, String>>,
    surfaces: OnceLock<Result<Vec<CurvatureReport<f64>>, String>>,
}

impl Ctx {
    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
    }

    fn basis(&self) -> Result<&Vec<KoebeQd<f64>>, String> {
        self.basis
            .get_or_init(|| {
                koebe_qd_basis(&self.p.mesh, &self.z, &self.p.centers, &self.p.radii).map_err(err)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn lifted(&self) -> Result<&Lifted, String> {
        self.lifted
            .get_or_init(|| {
                let (p, lift) = normalize_for_lifting(&self.p).map_err(err)?;
                let pair = koebe_polyhedra(&lift).map_err(err)?;
                let z = p.tangency_points();
                let basis = koebe_qd_basis(&p.mesh, &z, &p.centers, &p.radii).map_err(err)?;
                Ok(Lifted {
                    p,
                    z,
                    lift,
                    pair,
                    basis,
                })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn surfaces(&self) -> Result<&Vec<CurvatureReport<f64>>, String> {
        self.surfaces
            .get_or_init(|| {
                let l = self.lifted()?;
                let m = MedialComplex::new(l.p.mesh.clone());
                l.basis
                    .par_iter()
                    .map(|b| {
                        minimal_surfaces(b, &l.z, &m, &l.lift, &l.pair)
                            .map(|s| s.report)
                            .map_err(err)
                    })
                    .collect()
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn harmonic_sigma(&self) -> Result<Vec<f64>, String> {
        let mut rng = self.rng(2);
        let b: Vec<f64> = (0..self.p.mesh.boundary_vertices().len())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        sigma_dirichlet(&self.p, &b).map_err(err)
    }
}

fn max_over<F: Fn(&CurvatureReport<f64>) -> f64>(ctx: &Ctx, f: F) -> Res {
    Ok(max_of(ctx.surfaces()?.iter().map(f)))
}

type CheckFn = Box<dyn Fn(&Ctx) -> Res + Send + Sync>;

fn checks_for(suite: Suite) -> Vec<(&'static str, f64, CheckFn)> {
    let mut out: Vec<(&'static str, f64, CheckFn)> = Vec::new();
    if suite.includes(Suite::Invariants) {
        out.push((
            "packing.angle_error",
            1e-10,
            Box::new(|c| Ok(c.p.angle_error())),
        ));
        out.push((
            "packing.tangency",
            1e-10,
            Box::new(|c| Ok(c.p.tangency_residual())),
        ));
        out.push((
            "packing.orientation",
            0.0,
            Box::new(|c| {
                Ok(if c.p.is_positively_oriented() {
                    0.0
                } else {
                    1.0
                })
            }),
        ));
        out.push((
            "cr_dagger.imaginary",
            1e-10,
            Box::new(|c| {
                let cr = packing_cross_ratios(&c.p).map_err(err)?;
                Ok(max_of(cr.interior().map(|(_, w)| w.re.abs() / w.norm())))
            }),
        ));
        out.push((
            "cr_dagger.consistency",
            1e-10,
            Box::new(|c| Ok(packing_cross_ratios(&c.p).map_err(err)?.consistency)),
        ));
        out.push((
            "cr_dagger.moebius_invariance",
            1e-9,
            Box::new(|c| {
                let l = c.lifted()?;
                let mut rng = c.rng(1);
                let mut r = || C::new(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
                let t = MoebiusMap::new(C::new(1.0, 0.0) + r(), r(), r(), C::new(1.0, 0.0))
                    .map_err(err)?;
                let q = moebius_image_packing(&t, &l.p).map_err(err)?;
                let (a, b) = (
                    packing_cross_ratios(&l.p).map_err(err)?,
                    packing_cross_ratios(&q).map_err(err)?,
                );
                Ok(max_of(
                    a.interior()
                        .zip(b.interior())
                        .map(|((_, x), (_, y))| (x - y).norm() / x.norm()),
                ))
            }),
        ));
        out.push((
            "omega.consistency",
            1e-10,
            Box::new(|c| Ok(omega_form(&c.p).map_err(err)?.consistency)),
        ));
        out.push((
            "omega.tangent",
            1e-10,
            Box::new(|c| {
                let w = omega_form(&c.p).map_err(err)?;
                Ok(max_of(w.interior().map(|(e, x)| {
                    let (u, v) = c.p.mesh.edge(e);
                    let d = c.p.centers[v] - c.p.centers[u];
                    (x * d.conj()).re.abs() / (x.norm() * d.norm())
                })))
            }),
        ));
        out.push((
            "pattern.argument",
            1e-9,
            Box::new(|c| {
                let cr = pattern_cross_ratios(&c.z, &c.m).map_err(err)?;
                Ok(max_of(cr.interior().map(|(_, w)| {
                    let a = w.arg().abs();
                    (a - std::f64::consts::FRAC_PI_2)
                        .abs()
                        .min((a - std::f64::consts::PI).abs())
                })))
            }),
        ));
        out.push((
            "invariants.vertex_rotation",
            1e-8,
            Box::new(|c| {
                let mut rng = c.rng(3);
                let b: Vec<f64> =
                    c.p.mesh
                        .boundary_vertices()
                        .iter()
                        .map(|&v| c.p.radii[v] * (1.0 + rng.gen_range(-0.1..0.1)))
                        .collect();
                let q = solve_packing(c.p.mesh.clone(), &b, SolveOptions::default())
                    .map_err(err)?
                    .0;
                let r = extract_vertex_rotation(&c.z, &q.tangency_points(), &c.m, f64::INFINITY)
                    .map_err(err)?;
                Ok(r.residual)
            }),
        ));
        out.push((
            "lift.edge_tangency",
            1e-9,
            Box::new(|c| {
                let l = c.lifted()?;
                Ok(l.pair.tangency_residual(&l.p.mesh, &l.lift))
            }),
        ));
        out.push((
            "lift.polarity",
            1e-10,
            Box::new(|c| {
                let l = c.lifted()?;
                let mut worst = 0.0f64;
                for (v, plane) in l.lift.vertex_planes.iter().enumerate() {
                    let pole = plane.pole().map_err(err)?;
                    for k in 0..6 {
                        let w = l.p.centers[v] + C::from_polar(l.p.radii[v], k as f64);
                        worst = worst.max((pole.dot(stereographic(w)) - 1.0).abs());
                    }
                }
                Ok(worst)
            }),
        ));
        out.push((
            "qd.koebe_residual",
            1e-10,
            Box::new(|c| {
                let mut worst = 0.0f64;
                for b in c.basis()? {
                    worst = worst.max(check_koebe_qd(b, &c.p.mesh, &c.z).map_err(err)?);
                }
                Ok(worst)
            }),
        ));
        out.push((
            "qd.general_residual",
            1e-9,
            Box::new(|c| {
                let mut worst = 0.0f64;
                for q in general_qd_basis(&c.z, &c.m).map_err(err)? {
                    worst = worst.max(check_general_qd(&q, &c.z, &c.m).map_err(err)?);
                }
                Ok(worst)
            }),
        ));
        out.push((
            "qd.dimension_match",
            0.0,
            Box::new(|c| {
                let k = c.basis()?.len() as f64;
                let g = general_qd_basis(&c.z, &c.m).map_err(err)?.len() as f64;
                Ok((k - g).abs())
            }),
        ));
        out.push((
            "qd.round_trip",
            1e-8,
            Box::new(|c| {
                let mut worst = 0.0f64;
                for b in c.basis()? {
                    let q = koebe_to_general(b, &c.z, &c.m).map_err(err)?;
                    let (back, _) = general_to_koebe(&q.qd, &c.z, &c.m).map_err(err)?;
                    for (x, y) in back.lambda.iter().zip(&b.lambda) {
                        worst = worst.max((x - y).abs());
                    }
                }
                Ok(worst)
            }),
        ));
        out.push((
            "qd.q_real",
            1e-9,
            Box::new(|c| {
                let mut worst = 0.0f64;
                for b in c.basis()? {
                    worst = worst.max(koebe_to_general(b, &c.z, &c.m).map_err(err)?.max_imag);
                }
                Ok(worst)
            }),
        ));
        out.push((
            "qd.moebius_kernel",
            1e-10,
            Box::new(|c| {
                let l = c.lifted()?;
                Ok(max_of(InfMoebius::<f64>::real_basis().iter().map(|g| {
                    let zd: Vec<C<f64>> = l.z.iter().map(|&x| g.velocity_at(x)).collect();
                    koebe_qd_from_velocity(&l.p.mesh, &l.z, &zd).0.norm()
                })))
            }),
        ));
    }
    if suite.includes(Suite::Harmonic) {
        out.push((
            "cot.realized",
            1e-10,
            Box::new(|c| {
                let w = cot_weights(&c.p, &c.m);
                let r = realized_cot_weights(&c.z, c.m.tmg()).map_err(err)?;
                Ok(max_of(w.iter().zip(&r).map(|(a, b)| (a - b).abs())))
            }),
        ));
        out.push((
            "cot.diagonal_zero",
            0.0,
            Box::new(|c| {
                let w = cot_weights(&c.p, &c.m);
                Ok(max_of(
                    (0..w.len())
                        .filter(|&e| c.m.is_diagonal(e))
                        .map(|e| w[e].abs()),
                ))
            }),
        ));
        out.push((
            "cot.face_radius",
            1e-12,
            Box::new(|c| {
                let mut worst = 0.0f64;
                for f in 0..c.p.mesh.face_count() {
                    let [a, b, d] = c.p.mesh.face_edges(f);
                    let (_, r) = crate::geom::circumcircle(c.z[a], c.z[b], c.z[d])
                        .ok_or_else(|| format!("degenerate face {f}"))?;
                    worst = worst.max((face_radius(&c.p, f) - r).abs() / r);
                }
                Ok(worst)
            }),
        ));
        out.push((
            "sigma.dimension",
            0.0,
            Box::new(|c| {
                let s = sigma_harmonic_basis(&c.p).len() as f64;
                Ok((s - c.basis()?.len() as f64 - 3.0).abs())
            }),
        ));
        out.push((
            "alpha.harmonic",
            1e-9,
            Box::new(|c| {
                let d = deformation_from_sigma(&c.harmonic_sigma()?, &c.p).map_err(err)?;
                check_alpha_harmonic(&d.alpha, &c.p, &c.m).map_err(err)
            }),
        ));
        out.push((
            "alpha.flip_invariance",
            1e-12,
            Box::new(|c| {
                let d = deformation_from_sigma(&c.harmonic_sigma()?, &c.p).map_err(err)?;
                let r0 = check_alpha_harmonic(&d.alpha, &c.p, &c.m).map_err(err)?;
                let diags = c.m.diagonals();
                if diags.is_empty() {
                    return Ok(0.0);
                }
                let k = c.rng(4).gen_range(0..diags.len());
                let (a, b) = diags[k];
                let m2 = c.m.flip_diagonal(a, b).map_err(err)?;
                Ok((check_alpha_harmonic(&d.alpha, &c.p, &m2).map_err(err)? - r0).abs())
            }),
        ));
        out.push((
            "deformation.closedness",
            1e-10,
            Box::new(|c| {
                Ok(deformation_from_sigma(&c.harmonic_sigma()?, &c.p)
                    .map_err(err)?
                    .closedness)
            }),
        ));
        out.push((
            "sigma.koebe_residual",
            1e-8,
            Box::new(|c| {
                let (l, _) = sigma_to_koebe_qd(&c.harmonic_sigma()?, &c.p).map_err(err)?;
                check_koebe_qd(&l, &c.p.mesh, &c.z).map_err(err)
            }),
        ));
    }
    if suite.includes(Suite::Minimal) {
        for (name, tol, f) in curvature_metrics() {
            out.push((name, tol, Box::new(move |c| max_over(c, f))));
        }
    }
    out
}

/// Name, default tolerance and extractor of every curvature-report metric.
pub fn curvature_metrics() -> Vec<(&'static str, f64, fn(&CurvatureReport<f64>) -> f64)> {
    vec![
        ("minimal.koebe_closedness", 1e-10, |r| r.koebe_closedness),
        ("minimal.koebe_mean_curvature", 1e-9, |r| {
            r.max_koebe_curvature()
        }),
        ("minimal.parallel_im_ncstar", 1e-9, |r| r.parallel_im_ncstar),
        ("minimal.parallel_re_nc", 1e-9, |r| r.parallel_re_nc),
        ("minimal.conjugate_rotation", 1e-10, |r| {
            r.conjugate.rotation / r.conjugate.scale.max(f64::MIN_POSITIVE)
        }),
        ("minimal.conjugate_length", 1e-10, |r| {
            r.conjugate.length / r.conjugate.scale.max(f64::MIN_POSITIVE)
        }),
        ("minimal.edge_tangency", 1e-9, |r| r.edge_tangency),
        ("minimal.general_closedness", 1e-10, |r| {
            r.general_closedness
        }),
        ("minimal.general_qd_residual", 1e-9, |r| {
            r.general_qd_residual
        }),
        ("minimal.restriction_defect", 1e-8, |r| r.restriction_defect),
        ("minimal.general_mean_curvature", 1e-8, |r| {
            r.max_general_curvature()
        }),
        ("minimal.general_planarity", 1e-9, |r| r.max_planarity()),
        ("minimal.general_normal_angle", 1e-7, |r| {
            r.max_normal_angle()
        }),
    ]
}

/// Checks of a single curvature report.
pub fn curvature_checks(r: &CurvatureReport<f64>, tol: &Tolerances) -> Vec<Check> {
    curvature_metrics()
        .into_iter()
        .map(|(name, d, f)| Check::new(name, Ok(f(r)), tol.get(name, d)))
        .collect()
}

/// Runs the selected suite on the current rayon pool.
pub fn verify(
    p: &CirclePacking<f64>,
    input_hash: &str,
    opts: &VerifyOptions,
) -> VerificationReport {
    let m = MedialComplex::new(p.mesh.clone());
    let ctx = Ctx {
        z: p.tangency_points(),
        p: p.clone(),
        seed: opts.seed,
        m,
        basis: OnceLock::new(),
        lifted: OnceLock::new(),
        surfaces: OnceLock::new(),
    };
    let list = checks_for(opts.suite);
    let checks: Vec<Check> = list
        .par_iter()
        .map(|(name, default, f)| {
            let t0 = Instant::now();
            let res = f(&ctx);
            let mut c = Check::new(name, res, opts.tolerances.get(name, *default));
            if opts.timings {
                c.wall_ms = Some(t0.elapsed().as_secs_f64() * 1e3);
            }
            c
        })
        .collect();
    let mut provenance = BTreeMap::new();
    provenance.insert("input_sha256".to_string(), input_hash.to_string());
    provenance.insert("gauges".to_string(), GAUGES.to_string());
    provenance.insert("tmg_fingerprint".to_string(), ctx.m.fingerprint());
    provenance.insert("vertices".to_string(), p.mesh.vertex_count().to_string());
    let mut warnings = Vec::new();
    if let Ok(b) = ctx.basis() {
        provenance.insert("koebe_dimension".to_string(), b.len().to_string());
        if b.is_empty() {
            warnings.push("ZeroSurface: no Koebe-type differentials on this packing".to_string());
        }
    }
    VerificationReport::new(opts.suite, opts.seed, provenance, warnings, checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::to_json;
    use crate::mesh::hex_disk;
    use std::sync::Arc;

    fn flower() -> CirclePacking<f64> {
        solve_packing(
            Arc::new(hex_disk(1).unwrap()),
            &[1.0; 6],
            SolveOptions::default(),
        )
        .unwrap()
        .0
    }

    #[test]
    fn flower_passes_everything() {
        let r = verify(&flower(), "x", &VerifyOptions::default());
        for c in &r.checks {
            assert!(c.pass, "{c:?}");
        }
        assert!(r.pass);
        let names: Vec<_> = r.checks.iter().map(|c| c.name.clone()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn perturbed_radius_fails_tangency() {
        let mut p = flower();
        p.radii[3] += 1e-3;
        let opts = VerifyOptions {
            suite: Suite::Invariants,
            ..Default::default()
        };
        let r = verify(&p, "x", &opts);
        assert!(!r.pass);
        assert!(r.failures().iter().any(|c| c.name == "packing.tangency"));
    }

    #[test]
    fn deterministic_across_pools() {
        let p = flower();
        let opts = VerifyOptions {
            seed: 7,
            ..Default::default()
        };
        let run = |n: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap();
            pool.install(|| to_json(&verify(&p, "x", &opts)).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::default();
        t.add("1e-3").unwrap();
        t.add("packing.tangency=0").unwrap();
        assert_eq!(t.get("packing.tangency", 1.0), 0.0);
        assert_eq!(t.get("other", 1.0), 1e-3);
        assert!(t.add("x=abc").is_err());
        assert!(t.add("-1").is_err());
    }
}
