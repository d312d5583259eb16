//! File formats, experiment configs and subcommands behind the `actol` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::path::{Path, PathBuf};

use crate::config::{GradcheckExperiment, RewardExperiment, TrainExperiment, VerifyExperiment};
pub use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Train,
    Verify,
    Reward,
    Gradcheck,
}

/// Runs one subcommand and returns its exit code. Errors carry their own
/// exit code through [`CliError::exit_code`].
pub fn execute(command: Command, config_path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<i32> {
    let config_dir = config_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let pick_out = |configured: Option<&PathBuf>| config::out_dir(out, configured.map(PathBuf::as_path));
    match command {
        Command::Train => {
            let mut cfg: TrainExperiment = config::load(config_path)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.train.seed = cfg.seed;
            commands::train::run(&cfg, &config_dir, &pick_out(cfg.out_dir.as_ref()))?;
            Ok(0)
        }
        Command::Verify => {
            let mut cfg: VerifyExperiment = config::load(config_path)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            let pass = commands::verify::run(&cfg, &pick_out(cfg.out_dir.as_ref()))?;
            Ok(if pass { 0 } else { 1 })
        }
        Command::Reward => {
            let mut cfg: RewardExperiment = config::load(config_path)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            commands::reward::run(&cfg, &pick_out(cfg.out_dir.as_ref()))?;
            Ok(0)
        }
        Command::Gradcheck => {
            let mut cfg: GradcheckExperiment = config::load(config_path)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            let pass = commands::gradcheck::run(&cfg, &pick_out(cfg.out_dir.as_ref()))?;
            Ok(if pass { 0 } else { 1 })
        }
    }
}
