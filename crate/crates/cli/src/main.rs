use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vem_cli::config::ExperimentConfig;
use vem_cli::{check, runner};

#[derive(Parser)]
#[command(
    name = "vem",
    version,
    about = "Virtual element convergence experiments on moving polygonal meshes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a configured convergence experiment
    Run {
        /// Path to a key=value config file
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate a centroidal Voronoi mesh and write it to a file
    MeshGen {
        /// Number of cells
        #[arg(long)]
        cells: usize,
        /// Generator seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output mesh path
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the internal consistency checks
    Check,
}

const EXIT_USAGE: u8 = 1;
const EXIT_MESH: u8 = 2;
const EXIT_NUMERICS: u8 = 3;
const EXIT_IO: u8 = 4;

/// Maps an error chain onto the exit-code classes: mesh problems, io
/// problems, and everything numerical.
fn classify(err: &anyhow::Error) -> u8 {
    fn mesh_code(m: &vem::mesh::MeshError) -> u8 {
        if matches!(m, vem::mesh::MeshError::Io(_)) {
            EXIT_IO
        } else {
            EXIT_MESH
        }
    }
    for cause in err.chain() {
        if let Some(m) = cause.downcast_ref::<vem::mesh::MeshError>() {
            return mesh_code(m);
        }
        if let Some(v) = cause.downcast_ref::<vem::VemError>() {
            return match v {
                vem::VemError::Mesh(m) => mesh_code(m),
                _ => EXIT_NUMERICS,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_NUMERICS
}

fn cmd_run(config_path: &Path) -> Result<(), (u8, anyhow::Error)> {
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        let err = anyhow::Error::new(e).context(format!("reading {}", config_path.display()));
        (EXIT_IO, err)
    })?;
    let cfg = ExperimentConfig::parse(&text).map_err(|e| {
        (EXIT_USAGE, e.context(format!("in {}", config_path.display())))
    })?;
    let art = runner::run_experiment(&cfg).map_err(|e| (classify(&e), e))?;
    for (name, rate) in art.table.norms.iter().zip(art.table.final_rates()) {
        println!("{name}: final rate {rate:.3}");
    }
    println!("wrote {}", art.csv_path.display());
    println!("wrote {}", art.manifest_path.display());
    Ok(())
}

fn cmd_mesh_gen(cells: usize, seed: u64, out: &Path) -> Result<(), (u8, anyhow::Error)> {
    let mesh = vem::mesh::voronoi::generate_cvt(cells, 100, seed)
        .map_err(|e| (EXIT_MESH, anyhow::Error::new(e)))?;
    vem::mesh::io::save_mesh(&mesh, out).map_err(|e| {
        let err = anyhow::Error::new(e).context(format!("writing {}", out.display()));
        (classify(&err), err)
    })?;
    println!(
        "wrote {} ({} cells, {} vertices)",
        out.display(),
        mesh.n_elements(),
        mesh.n_vertices()
    );
    Ok(())
}

fn cmd_check() -> u8 {
    let outcomes = check::run_checks();
    let mut all_pass = true;
    for o in &outcomes {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("check {}: {verdict} ({})", o.name, o.detail);
        all_pass &= o.pass;
    }
    if all_pass {
        0
    } else {
        EXIT_NUMERICS
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.cmd {
        Cmd::Run { config } => cmd_run(&config),
        Cmd::MeshGen { cells, seed, out } => cmd_mesh_gen(cells, seed, &out),
        Cmd::Check => return ExitCode::from(cmd_check()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
