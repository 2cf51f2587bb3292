//! `afc`: benchmark driver for the flux-corrected finite element solvers.
//!
//! `afc run <config>` executes one experiment and writes `solution.csv`,
//! `diagnostics.csv`, and `manifest.txt` into the output directory.
//! `afc convergence <config> --levels N` runs a mesh-refinement ladder
//! and writes `convergence.csv`. Exit codes: 0 success, 2 configuration
//! error, 3 solver abort, 4 non-convergence of the iterative entropy fix.

mod config;
mod output;

use afc_core::bench::{self, DtScaling};
use afc_core::SolverError;
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "afc", version, about = "Flux-corrected transport benchmarks for hyperbolic conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a config file.
    Run { config: PathBuf },
    /// Run a mesh refinement ladder and report errors and EOCs.
    Convergence {
        config: PathBuf,
        /// Number of refinement levels (doubling the mesh per level).
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Time-step refinement rule: dt ∝ h or dt ∝ h².
        #[arg(long, default_value = "h")]
        dt_scaling: String,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_NONCONVERGENCE: u8 = 4;

fn solver_exit_code(e: &SolverError) -> u8 {
    match e {
        SolverError::InvalidConfig(_) => EXIT_CONFIG,
        SolverError::FdiNonConvergence { .. } => EXIT_NONCONVERGENCE,
        _ => EXIT_SOLVER,
    }
}

fn load_experiment(path: &Path) -> Result<config::Experiment, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("afc: cannot read config '{}': {e}", path.display());
        EXIT_CONFIG
    })?;
    let mut exp = config::parse(&text).map_err(|e| {
        eprintln!("afc: {}: {e}", path.display());
        EXIT_CONFIG
    })?;
    if let Ok(dir) = std::env::var("AFC_OUTPUT_DIR") {
        if !dir.is_empty() {
            exp.output_dir = PathBuf::from(dir);
        }
    }
    Ok(exp)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), u8> {
    std::fs::create_dir_all(dir).map_err(|e| {
        eprintln!("afc: cannot create '{}': {e}", dir.display());
        EXIT_SOLVER
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| {
        eprintln!("afc: cannot write '{}': {e}", path.display());
        EXIT_SOLVER
    })
}

fn cmd_run(path: &Path) -> Result<(), u8> {
    let exp = load_experiment(path)?;
    let out = bench::run(&exp.run).map_err(|e| {
        eprintln!("afc: run failed: {e}");
        solver_exit_code(&e)
    })?;
    if out.max_cfl > 1.0 {
        eprintln!(
            "afc: warning: stage CFL number reached {:.3} (> 1); bound preservation is not guaranteed",
            out.max_cfl
        );
    }
    write_file(&exp.output_dir, "solution.csv", &output::solution_csv(&out))?;
    write_file(
        &exp.output_dir,
        "diagnostics.csv",
        &output::diagnostics_csv(&out),
    )?;
    write_file(&exp.output_dir, "manifest.txt", &config::render(&exp))?;
    println!(
        "{}: {} nodes, {} steps, max CFL {:.3}{}",
        exp.run.problem.as_str(),
        out.coords.len(),
        out.steps,
        out.max_cfl,
        out.e1
            .map(|e| format!(", e1 = {e:.6e}"))
            .unwrap_or_default()
    );
    Ok(())
}

fn cmd_convergence(path: &Path, levels: usize, dt_scaling: &str) -> Result<(), u8> {
    let exp = load_experiment(path)?;
    let scaling = match dt_scaling {
        "h" => DtScaling::H,
        "h2" => DtScaling::H2,
        other => {
            eprintln!("afc: unknown dt scaling '{other}' (use h or h2)");
            return Err(EXIT_CONFIG);
        }
    };
    let rows = bench::convergence(&exp.run, levels, scaling).map_err(|e| {
        eprintln!("afc: convergence failed: {e}");
        solver_exit_code(&e)
    })?;
    write_file(
        &exp.output_dir,
        "convergence.csv",
        &output::convergence_csv(&rows),
    )?;
    write_file(&exp.output_dir, "manifest.txt", &config::render(&exp))?;
    for r in &rows {
        match r.eoc {
            Some(eoc) => println!("{:>6} cells  e1 = {:.6e}  eoc = {:.3}", r.cells, r.e1, eoc),
            None => println!("{:>6} cells  e1 = {:.6e}", r.cells, r.e1),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => cmd_run(config),
        Command::Convergence {
            config,
            levels,
            dt_scaling,
        } => cmd_convergence(config, *levels, dt_scaling),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
