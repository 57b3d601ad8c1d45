use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wgstokes::harness::{
    find_case, list_cases, run_inf_sup_study, run_study, verify_case, write_text, StudyConfig,
};
use wgstokes::mesh::{MeshFamily, MeshOptions};
use wgstokes::solver::SolverMethod;
use wgstokes::Result;

#[derive(Parser)]
#[command(name = "wgstokes", version, about = "Weak Galerkin Stokes solver and convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a manufactured case on a refinement sequence and fit rates.
    Study {
        #[arg(long)]
        case: String,
        #[arg(long, default_value = "uniform-quad")]
        family: MeshFamily,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        #[arg(long, default_value_t = 4)]
        n0: usize,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value_t = MeshOptions::default().seed)]
        seed: u64,
        /// CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Eliminate cell-interior velocities before the direct solve.
        #[arg(long, conflicts_with = "minres")]
        condense: bool,
        /// Use preconditioned MINRES instead of a direct solve.
        #[arg(long)]
        minres: bool,
        /// Write A, B, c and the right-hand sides of each level next to the CSV.
        #[arg(long)]
        dump_matrices: bool,
        /// Also write the full study outcome as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// List the registered manufactured cases.
    Cases,
    /// Check a case's divergence, pressure mean and body force.
    Verify {
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Discrete inf-sup constants on a refinement sequence.
    Infsup {
        #[arg(long, default_value = "uniform-quad")]
        family: MeshFamily,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        #[arg(long, default_value_t = 4)]
        n0: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = MeshOptions::default().seed)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Study {
            case,
            family,
            degree,
            n0,
            levels,
            seed,
            out,
            condense,
            minres,
            dump_matrices,
            json,
        } => {
            let mut config = StudyConfig::new(&case, family, degree);
            config.n0 = n0;
            config.levels = levels;
            config.seed = seed;
            config.out = out;
            config.dump_matrices = dump_matrices;
            config.solver = match (condense, minres) {
                (true, _) => SolverMethod::Condensed,
                (_, true) => SolverMethod::Minres,
                _ => SolverMethod::Direct,
            };
            let outcome = run_study(&config)?;
            for d in &outcome.diagnostics {
                eprintln!("{}", d.solve);
            }
            print!("{}", outcome.summary());
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&outcome).expect("outcome serializes");
                write_text(&path, &text)?;
            }
            Ok(outcome.passed())
        }
        Command::Cases => {
            for c in list_cases() {
                let exact = match c.exact_from_degree {
                    Some(k) => format!("exact for k >= {k}"),
                    None => "not polynomial".to_string(),
                };
                println!("{:<26} {} [{}; {}]", c.name, c.description, c.regularity, exact);
            }
            Ok(true)
        }
        Command::Verify { case, samples, seed } => {
            let c = find_case(&case)?;
            let check = verify_case(&c, samples, seed)?;
            println!(
                "{}: max |div u| = {:.3e}, mean p = {:.3e}, gradient defect = {:.3e}, force defect = {:.3e} ({} samples, seed {})",
                check.name,
                check.max_divergence,
                check.pressure_mean,
                check.max_gradient_defect,
                check.max_force_defect,
                check.samples,
                check.seed
            );
            Ok(true)
        }
        Command::Infsup {
            family,
            degree,
            n0,
            levels,
            seed,
        } => {
            let rows = run_inf_sup_study(family, degree, n0, levels, seed)?;
            println!("{:>5} {:>5} {:>7} {:>10} {:>9} {:>10}", "level", "n", "cells", "h", "dofs", "beta_h");
            for r in &rows {
                println!(
                    "{:>5} {:>5} {:>7} {:>10.4e} {:>9} {:>10.6}",
                    r.level, r.n, r.cells, r.report.h, r.report.pressure_dofs, r.report.beta
                );
            }
            let betas: Vec<f64> = rows.iter().map(|r| r.report.beta).collect();
            let min = betas.iter().copied().fold(f64::INFINITY, f64::min);
            let max = betas.iter().copied().fold(0.0, f64::max);
            println!("min/max = {:.4}", min / max);
            Ok(min > 0.0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
