use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use fcomposite::cli::{run, Command};

#[derive(Clone, Copy, ValueEnum)]
enum Sub {
    Pdf,
    PowerAlloc,
    JointAlloc,
    Energy,
    Validate,
}

/// Composite F fading channel experiments.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// Configuration file (key = value lines); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() {
    let args = Args::parse();
    let cmd = match args.command {
        Sub::Pdf => Command::Pdf,
        Sub::PowerAlloc => Command::PowerAlloc,
        Sub::JointAlloc => Command::JointAlloc,
        Sub::Energy => Command::Energy,
        Sub::Validate => Command::Validate,
    };
    std::process::exit(run(cmd, args.config.as_deref(), &args.out, args.seed));
}
