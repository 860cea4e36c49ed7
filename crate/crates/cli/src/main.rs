//! `curlspec` — batch driver for curl eigenvalue computations.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 configuration error.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "curlspec", version, about = "Curl eigenvalues under Lagrangian boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration (defaults are used for omitted fields).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Single-threaded, bit-reproducible execution.
    #[arg(long, global = true)]
    sequential: bool,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy, Debug)]
enum Command {
    /// Eigenvalues nearest the shift, with constraint diagnostics.
    Solve,
    /// Hadamard formula against central differences over a step sweep.
    HadamardCheck,
    /// Follow eigenvalue branches along a deformation family.
    Track,
    /// Random perturbations of the ball's lowest triple.
    SplitExperiment,
    /// Volume-normalised eigenvalue optimisation.
    Optimize,
    /// Mesh statistics, topology and quality.
    MeshInfo,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::HadamardCheck => "hadamard-check",
            Command::Track => "track",
            Command::SplitExperiment => "split-experiment",
            Command::Optimize => "optimize",
            Command::MeshInfo => "mesh-info",
        }
    }
}

pub enum Failure {
    Config(String),
    Numerical(curlspec::Error),
}

impl From<curlspec::Error> for Failure {
    fn from(e: curlspec::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e)
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, String> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_error(out: &Path, command: &str, kind: &str, message: &str) {
    let doc = serde_json::json!({
        "version": curlspec::VERSION,
        "command": command,
        "error": { "kind": kind, "message": message },
    });
    if std::fs::create_dir_all(out).is_ok() {
        let _ = std::fs::write(out.join("error.json"), serde_json::to_string_pretty(&doc).unwrap());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let mut cfg = match load_config(cli.config.as_deref()).and_then(|c| c.validate().map(|_| c)) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("configuration error: {msg}");
            write_error(&cli.out, name, "config", &msg);
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.sequential {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    let ctx = commands::Context { cfg, out: cli.out.clone(), parallel: !cli.sequential, command: name };
    let run = match cli.command {
        Command::Solve => commands::solve(&ctx),
        Command::HadamardCheck => commands::hadamard_check(&ctx),
        Command::Track => commands::track(&ctx),
        Command::SplitExperiment => commands::split_experiment(&ctx),
        Command::Optimize => commands::optimize(&ctx),
        Command::MeshInfo => commands::mesh_info(&ctx),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            write_error(&cli.out, name, "config", &msg);
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            write_error(&cli.out, name, "numerical", &e.to_string());
            ExitCode::from(1)
        }
    }
}
