use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use carpet_cli::Command;

#[derive(Parser, Debug)]
#[command(name = "carpet", version, about = "Blown-up pseudo-Anosov sphere maps: tables, stages, images and reports")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// JSON config; fields left out take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run directory for the outputs.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Periodic points of the toral map, counted two ways.
    Periodic(Common),
    /// Build a carpet stage and check its invariants.
    Build(Common),
    /// Draw a stage as PNG or SVG.
    Render(Common),
    /// Correlations, Birkhoff averages and support of the pushed measure.
    Mixing(Common),
    /// Tracing controls, saddle sweep and the carpet experiments.
    Spec(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let (command, common) = match cli.command {
        Cmd::Periodic(c) => (Command::Periodic, c),
        Cmd::Build(c) => (Command::Build, c),
        Cmd::Render(c) => (Command::Render, c),
        Cmd::Mixing(c) => (Command::Mixing, c),
        Cmd::Spec(c) => (Command::Spec, c),
    };
    match carpet_cli::dispatch(command, common.config.as_deref(), common.seed, &common.out) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("verdict: FAIL");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
