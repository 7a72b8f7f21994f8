//! `gml`: command-line front end.
//!
//! ```text
//! gml solve --mode cartesian --eps 0.001 --K 50 --N 100 --M 100 --f const:1
//! gml solve --mode polar-symbolic --eps 0.01 --K 10 --iters 149 --out-expr lines.json
//! gml solve --mode compare --eps 0.1 --N 20 --M 20 --out-report cmp.json
//! ```
//!
//! Exit codes: 0 success, 2 invalid flags, 3 solver failure or
//! non-convergence, 4 I/O.

mod expr;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gml", version, about = "Proximal method-of-lines solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one solve and write the requested artifacts.
    Solve(SolveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Cartesian,
    PolarSymbolic,
    Oracle,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Coupling {
    Lagged,
    Corrected,
}

#[derive(Debug, Clone, clap::Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long, allow_negative_numbers = true)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub beta: f64,
    /// Proximal weight [default: 10 in polar-symbolic mode, 50 otherwise].
    #[arg(long = "K", allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// Number of line intervals (radial intervals in polar mode).
    #[arg(long = "N", default_value_t = 100)]
    pub n: usize,
    /// Intervals per line [default: N].
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Outer tolerance on the sup update (Newton residual in oracle mode).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    /// Fixed number of outer iterations [polar-symbolic default: 149].
    #[arg(long)]
    pub iters: Option<usize>,
    /// Source: `const:<v>`, `expr:<e>` or a bare expression in x, y.
    #[arg(long, default_value = "const:1", allow_hyphen_values = true)]
    pub f: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub b: f64,
    /// Lower boundary curve, an expression in x.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub y1: String,
    /// Upper boundary curve, an expression in x.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub y2: String,
    #[arg(long, value_enum, default_value_t = Coupling::Corrected)]
    pub coupling: Coupling,
    /// Angular nodes of the numeric polar cross-check.
    #[arg(long, default_value_t = 64)]
    pub m_theta: usize,
    #[arg(long)]
    pub out_field: Option<PathBuf>,
    #[arg(long)]
    pub out_expr: Option<PathBuf>,
    #[arg(long)]
    pub out_report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(run::EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let Command::Solve(args) = cli.command;
    match run::run(&args) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let Some(summary) = &e.summary {
                println!("{summary}");
            }
            eprintln!("gml: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
