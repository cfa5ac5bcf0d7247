//! `lighthill`: mesh generation, intersection, integration checks, projection
//! sweeps and the vortex-pair acoustic run, driven by an INI config file.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 geometry error, 3 solver error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lighthill_core::Error;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "lighthill", version, about = "Hybrid aeroacoustic coupling toolkit")]
struct Cli {
    /// INI config; `[general]` holds seed, workers and output_dir
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// worker threads, overriding `[general] workers`
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// override a config value, `section.key=value` (repeatable)
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut mesh between an acoustic and a fluid mesh
    Intersect {
        /// use the all-pairs bounding-box broad phase
        #[arg(long)]
        brute_force: bool,
    },
    /// Exact monomial integrals over both meshes and their cut mesh
    IntegrateCheck,
    /// Projection error sweep on nested Cartesian grids
    ProjectSweep,
    /// Corotating vortex pair: sources, projection and wave propagation
    VortexPair,
    /// Mesh generation and validation
    Mesh {
        #[command(subcommand)]
        action: MeshAction,
    },
}

#[derive(Subcommand)]
enum MeshAction {
    /// Generate a mesh from the `[mesh]` section
    Gen {
        /// output mesh file
        output: PathBuf,
    },
    /// Read and validate a mesh file
    Validate { path: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Geometry(_) | Error::UnsupportedGeometry(_) => 2,
        Error::Solver { .. } | Error::Dimension { .. } => 3,
        Error::InvalidArgument(_) | Error::Parse { .. } | Error::Io(_) => 1,
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    for o in &cli.overrides {
        cfg.set(o)?;
    }
    match cli.command {
        Command::Intersect { brute_force } => commands::intersect(&mut cfg, cli.workers, brute_force).map(|_| true),
        Command::IntegrateCheck => commands::integrate_check(&mut cfg, cli.workers),
        Command::ProjectSweep => commands::project_sweep(&mut cfg, cli.workers).map(|_| true),
        Command::VortexPair => commands::vortex_pair(&mut cfg, cli.workers).map(|_| true),
        Command::Mesh { action: MeshAction::Gen { output } } => commands::mesh_gen(&mut cfg, cli.workers, &output).map(|_| true),
        Command::Mesh { action: MeshAction::Validate { path } } => commands::mesh_validate(&path).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: check failed");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
