use std::path::PathBuf;
use std::process::ExitCode;

use actol::{execute, Command};
use clap::Parser;

/// Temporal-coherence objectives for vision-language embeddings: train,
/// verify, extract rewards and check gradients from a TOML config.
#[derive(Parser)]
#[command(name = "actol", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli.command, &cli.config, cli.out.as_deref(), cli.seed) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("actol: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
