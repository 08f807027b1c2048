use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use cpmin_cli::{
    cmd_generate, cmd_minimal, cmd_pack, cmd_qd, cmd_verify, exit_code, threads_from_env, QdAction,
};
use cpmin_core::io::QdType;
use cpmin_core::report::{Suite, Tolerances, VerifyOptions};

#[derive(Parser)]
#[command(
    name = "cpmin",
    version,
    about = "Circle packings, quadratic differentials and discrete minimal surfaces"
)]
struct Cli {
    /// Tolerance override, `<value>` for every check or `<check>=<value>`; repeatable.
    #[arg(long, global = true)]
    tol: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Koebe,
    General,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Invariants,
    Harmonic,
    Minimal,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a triangulated disk as mesh JSON.
    Generate {
        /// Mesh family; only `hex` is available.
        kind: String,
        generations: usize,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Solve for a circle packing with prescribed boundary radii.
    Pack {
        /// Mesh JSON or OFF file.
        mesh: PathBuf,
        /// `uniform:<r>`, a JSON array, or a file holding one.
        #[arg(long)]
        radii: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Compute a basis of differentials, check a differential, or build one from boundary data.
    Qd {
        packing: PathBuf,
        #[arg(long = "type", value_enum)]
        kind: Kind,
        /// Write the basis to `<out>_<k>.json`.
        #[arg(long, conflicts_with_all = ["check", "sigma"], requires = "out")]
        basis: bool,
        /// Differential file to check.
        #[arg(long, conflicts_with = "sigma")]
        check: Option<PathBuf>,
        /// Boundary values of the harmonic sigma: `cos:<k>`, `sin:<k>` or a JSON array.
        #[arg(long, requires = "out")]
        sigma: Option<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Build the minimal surfaces of a differential and write them as OBJ.
    Minimal {
        packing: PathBuf,
        qd: PathBuf,
        /// Output prefix.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run the verification suite on a packing.
    Verify {
        packing: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Record per-check wall time (makes the report non-reproducible).
        #[arg(long)]
        timings: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    let mut tol = Tolerances::default();
    for t in &cli.tol {
        tol.add(t).map_err(cpmin_cli::CliError::Usage)?;
    }
    match cli.cmd {
        Cmd::Generate {
            kind,
            generations,
            out,
        } => {
            let mesh = cmd_generate(&kind, generations, &out)?;
            println!("V={} F={}", mesh.vertex_count(), mesh.face_count());
            Ok(true)
        }
        Cmd::Pack { mesh, radii, out } => {
            let h = cmd_pack(&mesh, &radii, &out)?;
            println!(
                "iterations={} max_angle_error={:e} tangency_residual={:e}",
                h.iterations, h.max_angle_error, h.tangency_residual
            );
            Ok(true)
        }
        Cmd::Qd {
            packing,
            kind,
            basis,
            check,
            sigma,
            out,
        } => {
            let kind = match kind {
                Kind::Koebe => QdType::Koebe,
                Kind::General => QdType::General,
            };
            let action = match (basis, check, sigma, out) {
                (true, None, None, Some(prefix)) => QdAction::Basis { prefix },
                (false, Some(file), None, _) => QdAction::Check { file },
                (false, None, Some(input), Some(out)) => QdAction::Sigma { input, out },
                _ => {
                    return Err(cpmin_cli::CliError::Usage(
                        "qd needs exactly one of --basis, --check, --sigma".into(),
                    )
                    .into())
                }
            };
            let o = cmd_qd(&packing, kind, &action, &tol)?;
            if let Some(d) = o.dim {
                println!("dim={d}");
            }
            if let (Some(r), Some(t)) = (o.residual, o.tolerance) {
                println!("residual={r:e} tolerance={t:e}");
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            Ok(o.pass())
        }
        Cmd::Minimal { packing, qd, out } => {
            let o = cmd_minimal(&packing, &qd, &out, &tol)?;
            for w in &o.report.warnings {
                eprintln!("warning: {w}");
            }
            for c in o.report.checks.iter().filter(|c| !c.pass) {
                eprintln!(
                    "FAIL {} residual={:e} tolerance={:e}",
                    c.name, c.residual, c.tolerance
                );
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            Ok(o.report.pass)
        }
        Cmd::Verify {
            packing,
            suite,
            seed,
            timings,
            out,
        } => {
            let suite = match suite {
                SuiteArg::All => Suite::All,
                SuiteArg::Invariants => Suite::Invariants,
                SuiteArg::Harmonic => Suite::Harmonic,
                SuiteArg::Minimal => Suite::Minimal,
            };
            let opts = VerifyOptions {
                suite,
                seed,
                tolerances: tol,
                timings,
            };
            let (report, json) = cmd_verify(&packing, &opts, out.as_deref())?;
            if out.is_none() {
                print!("{json}");
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for c in report.failures() {
                eprintln!(
                    "FAIL {} residual={:e} tolerance={:e}",
                    c.name, c.residual, c.tolerance
                );
            }
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = threads_from_env().and_then(|n| {
        if let Some(n) = n {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()?;
        }
        run(cli)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
