//! `ermakov-lab`: solve, verify and classify Ermakov-type equations from JSON
//! spec files.

mod commands;
mod output;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad spec, flags or files; exit code 1.
    #[error("invalid input: {0}")]
    Input(String),
    /// Integration, singularity or reduction failure; exit code 2.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl From<ermakov_core::Error> for CliError {
    fn from(e: ermakov_core::Error) -> Self {
        if e.is_invalid_input() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Closed form against the oracle: t,x_closed,x_oracle,abs_dev,residual
    Solve,
    /// Symmetry residuals and commutator table (JSON)
    VerifySymmetry,
    /// First integral K along the integrated projective equation (CSV)
    FirstIntegral,
    /// Lie linearization test of H (JSON)
    Linearize,
    /// Quadrature pipeline against the oracle (CSV)
    Reduce,
    /// List bases, families and named constants
    Catalog,
}

#[derive(Debug, Parser)]
#[command(name = "ermakov-lab", version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Equation spec (JSON)
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Relative tolerance for the integrators (overrides the spec)
    #[arg(long)]
    rtol: Option<f64>,
    /// Absolute tolerance for the integrators (overrides the spec)
    #[arg(long)]
    atol: Option<f64>,
    /// Number of output samples
    #[arg(long)]
    grid: Option<usize>,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.command == Command::Catalog {
        print!("{}", commands::catalog());
        return Ok(());
    }
    let path = cli.spec.as_ref().ok_or_else(|| CliError::Input("--spec is required".into()))?;
    let spec = spec::read_spec(path)?;
    let opts = spec::RunOptions::merge(&spec, cli.rtol, cli.atol, cli.grid)?;
    let (name, body) = match cli.command {
        Command::Solve => ("solve.csv", commands::solve(&spec, &opts)?),
        Command::VerifySymmetry => ("verify_symmetry.json", commands::verify_symmetry(&spec, &opts)?),
        Command::FirstIntegral => ("first_integral.csv", commands::first_integral(&spec, &opts)?),
        Command::Linearize => ("linearize.json", commands::linearize(&spec, &opts)?),
        Command::Reduce => ("reduce.csv", commands::reduce(&spec, &opts)?),
        Command::Catalog => unreachable!(),
    };
    let written = output::write_atomic(&cli.out, name, &body)?;
    println!("{}", written.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ermakov-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
