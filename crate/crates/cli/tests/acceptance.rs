//! Acceptance criteria, one line of output each. Runs without the libtest
//! harness so that every criterion is reported even when an earlier one fails.

use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use cpmin_cli::{cmd_generate, cmd_minimal, cmd_pack, cmd_qd, cmd_verify, QdAction};
use cpmin_core::differentials::{
    general_qd_basis, koebe_qd_basis, koebe_qd_from_velocity, koebe_to_general, project_moebius,
    velocity_from_koebe_qd,
};
use cpmin_core::geom::{circumcircle, Vec3};
use cpmin_core::harmonic::{
    check_alpha_harmonic, cot_weights, deformation_from_sigma, face_radius, realized_cot_weights,
    sigma_dirichlet, sigma_harmonic_basis, sigma_to_koebe_qd,
};
use cpmin_core::invariants::{omega_form, packing_cross_ratios, pattern_cross_ratios};
use cpmin_core::io::QdType;
use cpmin_core::minimal::{minimal_surfaces, PolySurface};
use cpmin_core::packing::{koebe_polyhedra, normalize_for_lifting, solve_packing};
use cpmin_core::report::{Suite, Tolerances, VerifyOptions};
use cpmin_core::{hex_disk, CirclePacking, InfMoebius, MedialComplex, SolveOptions, C};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn packing(n: usize, boundary: &[f64]) -> CirclePacking<f64> {
    solve_packing(
        Arc::new(hex_disk(n).unwrap()),
        boundary,
        SolveOptions::default(),
    )
    .unwrap()
    .0
}

fn random_boundary(n: usize, seed: u64) -> Vec<f64> {
    let nb = hex_disk(n).unwrap().boundary_vertices().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..nb).map(|_| rng.gen_range(0.6..1.4)).collect()
}

fn flower() -> CirclePacking<f64> {
    packing(1, &[1.0; 6])
}

fn hex2() -> CirclePacking<f64> {
    packing(2, &[1.0; 12])
}

fn max_abs<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(
        0.0,
        |a, x| if x.is_nan() { f64::NAN } else { a.max(x.abs()) },
    )
}

// Flower with unit boundary radii: by symmetry the six petals are unit circles
// around a unit center circle (angle sum 6 * pi/3 = 2 pi). Each spoke 0-v has
// petals v-1, v+1 on either side, and with z on the unit-circle spokes
// cr-dagger = i sqrt(3). The spoke tangency point is at distance 1 from the
// center and the petal tangency points at distance sqrt(3) from it, so omega
// is i/sqrt(3) turned by the spoke direction.
fn criterion_1() -> Outcome {
    let p = flower();
    ensure((p.radii[0] - 1.0).abs() < 1e-10, || {
        format!("interior radius {}", p.radii[0])
    })?;
    let cr = packing_cross_ratios(&p).map_err(|e| e.to_string())?;
    let target = C::new(0.0, 3f64.sqrt());
    let dcr = max_abs(cr.interior().map(|(_, w)| (w - target).norm()));
    ensure(cr.interior().count() == 6 && dcr < 1e-10, || {
        format!("cr-dagger defect {dcr:e}")
    })?;
    let omega = omega_form(&p).map_err(|e| e.to_string())?;
    let dw = max_abs(omega.interior().map(|(e, w)| {
        let (u, v) = p.mesh.edge(e);
        let dir = (p.centers[v] - p.centers[u]).unscale((p.centers[v] - p.centers[u]).norm());
        (w - dir * C::new(0.0, 1.0 / 3f64.sqrt())).norm()
    }));
    ensure(dw < 1e-10, || format!("omega defect {dw:e}"))?;
    Ok(format!(
        "radius error {:.1e}, cr-dagger {dcr:.1e}, omega {dw:.1e}",
        (p.radii[0] - 1.0).abs()
    ))
}

fn qd_dims(p: &CirclePacking<f64>) -> (usize, usize) {
    let z = p.tangency_points();
    let m = MedialComplex::new(p.mesh.clone());
    (
        koebe_qd_basis(&p.mesh, &z, &p.centers, &p.radii)
            .unwrap()
            .len(),
        general_qd_basis(&z, &m).unwrap().len(),
    )
}

fn criterion_2() -> Outcome {
    let mut seen = Vec::new();
    let (k, g) = qd_dims(&flower());
    ensure(k == 3 && g == 3, || format!("flower {k}/{g}"))?;
    seen.push(format!("flower {k}/{g}"));
    let (k, g) = qd_dims(&hex2());
    ensure(k == g, || format!("hex_disk(2) {k}/{g}"))?;
    seen.push(format!("hex_disk(2) {k}/{g}"));
    for seed in 0..5 {
        let (k, g) = qd_dims(&packing(2, &random_boundary(2, seed)));
        ensure(k == g, || format!("random packing {seed}: {k}/{g}"))?;
        seen.push(format!("{k}/{g}"));
    }
    Ok(seen.join(", "))
}

fn criterion_3() -> Outcome {
    let b0 = random_boundary(2, 42);
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let dlog: Vec<f64> = b0.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p0 = packing(2, &b0);
    let at = |t: f64| {
        let b: Vec<f64> = b0
            .iter()
            .zip(&dlog)
            .map(|(r, s)| r * (t * s).exp())
            .collect();
        packing(2, &b)
    };
    let sigma = sigma_dirichlet(&p0, &dlog).map_err(|e| e.to_string())?;
    let (lambda, _) = sigma_to_koebe_qd(&sigma, &p0).map_err(|e| e.to_string())?;
    let lam = lambda.full(&p0.mesh);
    let z0 = p0.tangency_points();
    let m = MedialComplex::new(p0.mesh.clone());
    let q = koebe_to_general(&lambda, &z0, &m)
        .map_err(|e| e.to_string())?
        .qd
        .full(&m);
    let cr0 = packing_cross_ratios(&p0).unwrap();
    let pc0 = pattern_cross_ratios(&z0, &m).unwrap();
    let errs =
        |eps: f64| {
            let p = at(eps);
            let cr = packing_cross_ratios(&p).unwrap();
            let pc = pattern_cross_ratios(&p.tangency_points(), &m).unwrap();
            let el =
                max_abs(p0.mesh.interior_edges().into_iter().map(|e| {
                    (cr.values[e].unwrap() / cr0.values[e].unwrap()).ln().re / eps - lam[e]
                }));
            let eq =
                max_abs(m.tmg().interior_edges().into_iter().map(|e| {
                    (pc.values[e].unwrap() / pc0.values[e].unwrap()).ln().re / eps - q[e]
                }));
            (el, eq)
        };
    let (l1, q1) = errs(1e-3);
    let (l2, q2) = errs(5e-4);
    let (rl, rq) = (l1 / l2, q1 / q2);
    ensure(rl >= 1.9 && rq >= 1.9, || {
        format!("ratios lambda {rl:.3}, q {rq:.3}")
    })?;
    Ok(format!(
        "ratio lambda {rl:.3} (err {l1:.1e}), q {rq:.3} (err {q1:.1e})"
    ))
}

fn criterion_4() -> Outcome {
    let mut worst_kernel = 0.0f64;
    let mut worst_projection = 0.0f64;
    for p in [flower(), hex2(), packing(2, &random_boundary(2, 9))] {
        let z = p.tangency_points();
        for g in InfMoebius::<f64>::real_basis() {
            let v: Vec<C<f64>> = z.iter().map(|&w| g.velocity_at(w)).collect();
            worst_kernel = worst_kernel.max(koebe_qd_from_velocity(&p.mesh, &z, &v).0.norm());
        }
        for b in koebe_qd_basis(&p.mesh, &z, &p.centers, &p.radii).unwrap() {
            let zdot = velocity_from_koebe_qd(&b, &p.mesh, &z).map_err(|e| e.to_string())?;
            let (g, rest) = project_moebius(&z, &zdot);
            let along: Vec<C<f64>> = z.iter().map(|&w| g.velocity_at(w)).collect();
            let carried = koebe_qd_from_velocity(&p.mesh, &z, &along).0.norm();
            let l = koebe_qd_from_velocity(&p.mesh, &z, &rest).0;
            let d = max_abs(l.lambda.iter().zip(&b.lambda).map(|(x, y)| x - y));
            worst_projection = worst_projection.max(carried).max(d);
        }
    }
    ensure(worst_kernel <= 1e-10 && worst_projection <= 1e-10, || {
        format!("kernel {worst_kernel:e}, projection {worst_projection:e}")
    })?;
    Ok(format!(
        "generators {worst_kernel:.1e}, basis projection {worst_projection:.1e}"
    ))
}

struct PipelineMax {
    closed: f64,
    h: f64,
    parallel: f64,
    conj: f64,
    tangency: f64,
    restriction: f64,
    gh: f64,
    planarity: f64,
    count: usize,
}

fn pipeline() -> Result<PipelineMax, String> {
    let mut out = PipelineMax {
        closed: 0.0,
        h: 0.0,
        parallel: 0.0,
        conj: 0.0,
        tangency: 0.0,
        restriction: 0.0,
        gh: 0.0,
        planarity: 0.0,
        count: 0,
    };
    for raw in [flower(), hex2(), packing(2, &random_boundary(2, 5))] {
        let (p, lift) = normalize_for_lifting(&raw).map_err(|e| e.to_string())?;
        let pair = koebe_polyhedra(&lift).map_err(|e| e.to_string())?;
        let z = p.tangency_points();
        let m = MedialComplex::new(p.mesh.clone());
        for b in koebe_qd_basis(&p.mesh, &z, &p.centers, &p.radii).unwrap() {
            let r = minimal_surfaces(&b, &z, &m, &lift, &pair)
                .map_err(|e| e.to_string())?
                .report;
            let s = r.conjugate.scale;
            out.closed = out.closed.max(r.koebe_closedness);
            out.h = out.h.max(r.max_koebe_curvature());
            out.parallel = out.parallel.max(r.parallel_im_ncstar).max(r.parallel_re_nc);
            out.conj = out
                .conj
                .max(r.conjugate.rotation / s)
                .max(r.conjugate.length / s);
            out.tangency = out.tangency.max(r.edge_tangency);
            out.restriction = out.restriction.max(r.restriction_defect);
            out.gh = out.gh.max(r.max_general_curvature());
            out.planarity = out.planarity.max(r.max_planarity());
            out.count += 1;
        }
    }
    Ok(out)
}

fn criterion_5() -> Outcome {
    let r = pipeline()?;
    let ok =
        r.closed < 1e-10 && r.h < 1e-9 && r.parallel < 1e-9 && r.conj < 1e-10 && r.tangency < 1e-9;
    let msg = format!(
        "{} differentials: closedness {:.1e}, H {:.1e}, parallel {:.1e}, conjugate {:.1e}, tangency {:.1e}",
        r.count, r.closed, r.h, r.parallel, r.conj, r.tangency
    );
    ensure(ok, || msg.clone())?;
    Ok(msg)
}

fn criterion_6() -> Outcome {
    let r = pipeline()?;
    let ok = r.restriction < 1e-8 && r.gh < 1e-8 && r.planarity < 1e-9;
    let msg = format!(
        "{} differentials: restriction {:.1e}, general H {:.1e}, planarity {:.1e}",
        r.count, r.restriction, r.gh, r.planarity
    );
    ensure(ok, || msg.clone())?;
    Ok(msg)
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    for (name, p) in [
        ("flower", flower()),
        ("hex_disk(2)", hex2()),
        ("random", packing(2, &random_boundary(2, 3))),
    ] {
        let z = p.tangency_points();
        let m = MedialComplex::new(p.mesh.clone());
        let ds = sigma_harmonic_basis(&p).len();
        let dk = koebe_qd_basis(&p.mesh, &z, &p.centers, &p.radii)
            .unwrap()
            .len();
        ensure(ds == dk + 3, || format!("{name}: sigma {ds} vs koebe {dk}"))?;
        if name == "flower" {
            ensure(ds == 6, || format!("flower sigma dimension {ds}"))?;
        }
        let w = cot_weights(&p, &m);
        let rw = realized_cot_weights(&z, m.tmg()).map_err(|e| e.to_string())?;
        let dw = max_abs(w.iter().zip(&rw).map(|(a, b)| a - b));
        ensure(dw < 1e-10, || format!("{name}: cot weights {dw:e}"))?;
        let diag = (0..w.len()).filter(|&e| m.is_diagonal(e)).map(|e| w[e]);
        ensure(diag.clone().all(|x| x == 0.0), || {
            format!("{name}: nonzero diagonal weight")
        })?;
        let dr = max_abs((0..p.mesh.face_count()).map(|f| {
            let [a, b, c] = p.mesh.face_edges(f);
            face_radius(&p, f) - circumcircle(z[a], z[b], z[c]).unwrap().1
        }));
        ensure(dr < 1e-12, || format!("{name}: R_ijk {dr:e}"))?;
        let nb = p.mesh.boundary_vertices().len();
        let mut rng = ChaCha8Rng::seed_from_u64(ds as u64);
        let bvals: Vec<f64> = (0..nb).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sigma = sigma_dirichlet(&p, &bvals).map_err(|e| e.to_string())?;
        let d = deformation_from_sigma(&sigma, &p).map_err(|e| e.to_string())?;
        let mut ra = check_alpha_harmonic(&d.alpha, &p, &m).map_err(|e| e.to_string())?;
        let flips = m.diagonals();
        for &(a, b) in &flips {
            let m2 = m.flip_diagonal(a, b).map_err(|e| e.to_string())?;
            ra = ra.max(check_alpha_harmonic(&d.alpha, &p, &m2).map_err(|e| e.to_string())?);
        }
        ensure(ra < 1e-9, || format!("{name}: alpha residual {ra:e}"))?;
        notes.push(format!(
            "{name} {ds}={dk}+3 cot {dw:.0e} R {dr:.0e} alpha {ra:.0e} ({} flips)",
            flips.len()
        ));
    }
    Ok(notes.join("; "))
}

fn criterion_8() -> Outcome {
    let pts = (0..8)
        .map(|k| Vec3::new((k & 1) as f64, ((k >> 1) & 1) as f64, ((k >> 2) & 1) as f64))
        .collect();
    let faces = vec![
        vec![0, 2, 3, 1],
        vec![4, 5, 7, 6],
        vec![0, 1, 5, 4],
        vec![2, 6, 7, 3],
        vec![0, 4, 6, 2],
        vec![1, 3, 7, 5],
    ];
    let cube = PolySurface::new(pts, faces);
    let dh = max_abs((0..6).map(|f| cube.mean_curvature(f).map_or(f64::NAN, |h| h - 4.0)));
    ensure(dh < 1e-12, || format!("cube defect {dh:e}"))?;
    let pts = (0..16)
        .map(|k| Vec3::new((k % 4) as f64, (k / 4) as f64, 0.0))
        .collect();
    let faces = (0..9)
        .map(|q| {
            let v = q % 3 + 4 * (q / 3);
            vec![v, v + 1, v + 5, v + 4]
        })
        .collect();
    let flat = PolySurface::new(pts, faces)
        .mean_curvature(4)
        .map_err(|e| e.to_string())?;
    ensure(flat == 0.0, || format!("flat H {flat:e}"))?;
    Ok(format!("cube H = 4 within {dh:.0e}, flat H = {flat}"))
}

fn setup(dir: &Path, n: usize) -> Result<std::path::PathBuf, String> {
    let mesh = dir.join(format!("hex{n}.json"));
    let packing = dir.join(format!("hex{n}_packing.json"));
    cmd_generate("hex", n, &mesh).map_err(|e| e.to_string())?;
    cmd_pack(&mesh, "uniform:1", &packing).map_err(|e| e.to_string())?;
    Ok(packing)
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = setup(dir.path(), 2)?;
    let opts = VerifyOptions {
        seed: 1234,
        ..Default::default()
    };
    let (r1, a) = cmd_verify(&p, &opts, None).map_err(|e| e.to_string())?;
    let (_, b) = cmd_verify(&p, &opts, None).map_err(|e| e.to_string())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let (_, c) = pool
        .install(|| cmd_verify(&p, &opts, None))
        .map_err(|e| e.to_string())?;
    ensure(a == b && a == c, || "reports differ".into())?;
    ensure(r1.pass, || "hex_disk(2) verification failed".into())?;
    Ok(format!(
        "{} bytes, {} checks, identical over 3 runs",
        a.len(),
        r1.checks.len()
    ))
}

fn criterion_10() -> Outcome {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = setup(dir.path(), 4)?;
    let qd = dir.path().join("enneper_lambda.json");
    let action = QdAction::Sigma {
        input: "cos:3".into(),
        out: qd.clone(),
    };
    cmd_qd(&p, QdType::Koebe, &action, &Tolerances::default()).map_err(|e| e.to_string())?;
    let m = cmd_minimal(&p, &qd, &dir.path().join("enneper"), &Tolerances::default())
        .map_err(|e| e.to_string())?;
    let objs = m
        .files
        .iter()
        .filter(|f| f.extension().is_some_and(|x| x == "obj"))
        .count();
    ensure(objs == 6, || format!("{objs} OBJ files"))?;
    let failed: Vec<String> = m
        .report
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.clone())
        .collect();
    ensure(failed.is_empty(), || {
        format!("surface checks failed: {failed:?}")
    })?;
    let opts = VerifyOptions {
        suite: Suite::All,
        ..Default::default()
    };
    let (r, _) = cmd_verify(&p, &opts, None).map_err(|e| e.to_string())?;
    let failed: Vec<String> = r.failures().iter().map(|c| c.name.clone()).collect();
    ensure(failed.is_empty(), || {
        format!("verification failed: {failed:?}")
    })?;
    let secs = t0.elapsed().as_secs_f64();
    ensure(secs <= 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "6 OBJ files, {} surface and {} suite checks pass, {secs:.1}s",
        m.report.checks.len(),
        r.checks.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("flower fixture exactness", criterion_1),
        ("quadratic differential dimensions", criterion_2),
        ("log-derivative identities", criterion_3),
        ("Moebius kernel", criterion_4),
        ("Weierstrass pipeline", criterion_5),
        ("extension to the general type", criterion_6),
        ("harmonic correspondences", criterion_7),
        ("mean curvature unit values", criterion_8),
        ("end-to-end determinism", criterion_9),
        ("enneper demo on hex_disk(4)", criterion_10),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let ms = t0.elapsed().as_secs_f64() * 1e3;
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{ms:.0} ms]", k + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{ms:.0} ms]", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
