use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use startensor_cli::{axioms, eval, validate, Plan};

#[derive(Parser)]
#[command(name = "startensor", version, about = "Validate and evaluate *-tensor network model files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Numerical tolerance for positivity, normalization and axiom checks.
    #[arg(long, global = true, env = "STARTENSOR_TOL")]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check algebras, tensors and the network of a model file.
    Validate {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        max_n: usize,
    },
    /// Evaluate the network and print its distribution.
    Eval {
        file: PathBuf,
        #[arg(long)]
        normalize: bool,
        #[arg(long, value_enum, default_value_t = Plan::Greedy)]
        plan: Plan,
    },
    /// Verify the axioms of every declared algebra.
    Axioms {
        file: PathBuf,
        #[arg(long, default_value_t = 5)]
        max_n: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = Cli::parse();
    let out = match cli.command {
        Command::Validate { file, max_n } => validate(&file, max_n, cli.tol),
        Command::Eval { file, normalize, plan } => eval(&file, normalize, plan, cli.tol),
        Command::Axioms { file, max_n } => axioms(&file, max_n, cli.tol),
    };
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.report.as_bytes());
    ExitCode::from(out.code as u8)
}
