use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emergent_cli::config::Tier;
use emergent_cli::verify::Fault;
use emergent_cli::{execute, Command, Invocation};

#[derive(Parser)]
#[command(name = "emergent", version, about = "Emergent quantum dynamics scenarios and invariant checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Langevin, Fokker–Planck or Madelung scenario.
    Simulate(RunArgs),
    /// Schrödinger evolution or spectrum.
    Solve(RunArgs),
    /// Neuron-pool fluctuations.
    Thermo(RunArgs),
    /// Finite-basis measurement.
    Measure(RunArgs),
    /// Madelung against Schrödinger.
    Compare(RunArgs),
    /// Registered invariant checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of stochastic scenarios.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    tier: Option<Tier>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Only checks whose id contains this text.
    #[arg(long)]
    only: Option<String>,
    #[arg(long, hide = true)]
    inject_drift_sign_flip: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = |command, a: RunArgs| Invocation {
        command,
        config: Some(a.config),
        seed: a.seed,
        out: a.out,
        tier: None,
        fault: None,
        only: None,
    };
    let inv = match cli.command {
        Cmd::Simulate(a) => run(Command::Simulate, a),
        Cmd::Solve(a) => run(Command::Solve, a),
        Cmd::Thermo(a) => run(Command::Thermo, a),
        Cmd::Measure(a) => run(Command::Measure, a),
        Cmd::Compare(a) => run(Command::Compare, a),
        Cmd::Verify(a) => Invocation {
            command: Command::Verify,
            config: a.config,
            seed: None,
            out: a.out,
            tier: a.tier,
            fault: a.inject_drift_sign_flip.then_some(Fault::DriftSignFlip),
            only: a.only,
        },
    };
    match execute(&inv) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
