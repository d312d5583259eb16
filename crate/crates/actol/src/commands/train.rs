use std::path::Path;

use actol_core::{generate_clip, synthetic::random_clip, trainer::train_free_with, ClipSequence};
use serde::Serialize;

use crate::config::{ClipSource, TrainExperiment};
use crate::error::Result;
use crate::io::{self, Cell, ClipFile, Csv};

pub const HISTORY_FILE: &str = "history.csv";
pub const FINAL_CLIP_FILE: &str = "final_clip.json";

pub fn initial_clip(source: &ClipSource, seed: u64, config_dir: &Path) -> Result<ClipSequence> {
    match source {
        ClipSource::Synthetic(p) => Ok(generate_clip(&p.spec(seed))?.0),
        ClipSource::Random { timestamps, dim } => random_checked(timestamps, *dim, seed),
        ClipSource::File { path } => io::read_clip(&config_dir.join(path)),
    }
}

fn random_checked(timestamps: &[u64], dim: usize, seed: u64) -> Result<ClipSequence> {
    if dim < 2 {
        return Err(actol_core::Error::DimensionTooSmall(dim).into());
    }
    if timestamps.len() < 2 {
        return Err(actol_core::Error::TooFewFrames { min: 2, found: timestamps.len() }.into());
    }
    if let Some(p) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
        return Err(actol_core::Error::TimestampsNotIncreasing(p + 1).into());
    }
    Ok(random_clip(timestamps, dim, seed))
}

#[derive(Serialize)]
struct FinalClip {
    #[serde(flatten)]
    clip: ClipFile,
}

pub fn run(cfg: &TrainExperiment, config_dir: &Path, out: &Path) -> Result<()> {
    let clip = initial_clip(&cfg.clip, cfg.seed, config_dir)?;
    let objective = cfg.objective.objective(cfg.train.temperature);
    let history = train_free_with(&clip, &cfg.train, &objective)?;

    let mut csv = Csv::new(&["step", "vlo", "bb", "total", "lower_bound", "gap"]);
    for (step, r) in history.records.iter().enumerate() {
        csv.row(&[
            Cell::Int(step as u64),
            Cell::Float(r.vlo),
            Cell::Float(r.bb),
            Cell::Float(r.total),
            Cell::Float(r.lower_bound),
            Cell::Float(r.gap),
        ]);
    }
    csv.write(&out.join(HISTORY_FILE))?;
    io::write_report(&out.join(FINAL_CLIP_FILE), cfg, FinalClip { clip: ClipFile::from_clip(&history.final_clip) })
}
