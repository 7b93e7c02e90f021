//! `causal-bounds` command-line tool.
//!
//! Exit codes: 0 success, 1 parse or usage error, 2 invalid model or
//! distribution, 3 a bound is violated by the supplied true ACE, 4 the
//! reproduction run missed a target.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use causal_bounds::epr::PolarizerAngles;
use clap::{Parser, Subcommand, ValueEnum};

use crate::output::Failure;

#[derive(Debug, Parser)]
#[command(name = "causal-bounds", version, about = "Bounds on the average causal effect under noncompliance")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "CAUSAL_BOUNDS_SEED", default_value_t = 42)]
    seed: u64,

    /// Numerical tolerance for checks and violation flags.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    output: OutputFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bounds report for trial records (CSV `z,x,y`) or a distribution (JSON).
    Bounds {
        #[arg(long)]
        input: PathBuf,
        /// Input format; inferred from the file extension when omitted.
        #[arg(long, value_enum)]
        format: Option<InputFormat>,
        /// Known ACE to test the bounds against.
        #[arg(long, allow_hyphen_values = true)]
        true_ace: Option<f64>,
    },
    /// Re-run the entangled-photon example and check it against its targets.
    Reproduce {
        /// Polarizer angles `a0,a1,b0,b1` in degrees.
        #[arg(long, allow_hyphen_values = true)]
        angles: Option<PolarizerAngles>,
        /// Run the CHSH and second-drug experiment instead.
        #[arg(long)]
        chsh: bool,
    },
    /// Randomized check of the bound theorems on quantum and classical models.
    Verify {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Factor dimensions `dA,dB` of the quantum models.
        #[arg(long, default_value = "2,2")]
        dims: String,
        /// Weight of the maximally mixed state in the random quantum states.
        #[arg(long, default_value_t = 0.0)]
        mixing: f64,
    },
    /// Sample trial records (CSV) from a classical, quantum or distribution JSON file.
    Simulate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        samples: usize,
        /// P(z = 1) for quantum models.
        #[arg(long, default_value_t = 0.5)]
        pz: f64,
    },
    /// Grid search over polarizer angles for the largest third-bound violation.
    Scan {
        /// Grid step in degrees, in (0, 45].
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Emit every grid point instead of the best one.
        #[arg(long)]
        all: bool,
    },
    /// Print the toy distribution (or with `--model` the quantum model) as JSON.
    Toy {
        #[arg(long, allow_hyphen_values = true)]
        angles: Option<PolarizerAngles>,
        #[arg(long)]
        model: bool,
    },
}

pub struct Config {
    pub seed: u64,
    pub tol: f64,
    pub output: OutputFormat,
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if !(cli.tol.is_finite() && cli.tol >= 0.0) {
        return Err(Failure::usage(format!("--tol must be a non-negative number, got {}", cli.tol)));
    }
    let cfg = Config { seed: cli.seed, tol: cli.tol, output: cli.output };
    match cli.command {
        Command::Bounds { input, format, true_ace } => commands::bounds(&cfg, &input, format, true_ace),
        Command::Reproduce { angles, chsh } => {
            if chsh {
                commands::reproduce_chsh(&cfg, angles)
            } else {
                commands::reproduce(&cfg, angles)
            }
        }
        Command::Verify { samples, dims, mixing } => commands::verify(&cfg, samples, &dims, mixing),
        Command::Simulate { input, samples, pz } => commands::simulate(&cfg, &input, samples, pz),
        Command::Scan { step, all } => commands::scan(&cfg, step, all),
        Command::Toy { angles, model } => commands::toy(angles.unwrap_or(PolarizerAngles::VIOLATION), model),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
