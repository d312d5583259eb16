use std::path::Path;

use actol_core::{compare_objectives, median, ComparisonRecord, NamedObjective, TrainConfig};
use serde::Serialize;

use crate::config::RewardExperiment;
use crate::error::{CliError, Result};
use crate::io::{self, Cell, Csv};

pub const COMPARISON_FILE: &str = "comparison.json";
pub const CURVES_DIR: &str = "curves";

#[derive(Serialize)]
struct SeedSummary {
    seed: u64,
    completion_index: usize,
    peak_frames: Vec<Peak>,
}

#[derive(Serialize)]
struct Peak {
    objective: String,
    peak_frame: usize,
    peak_error: usize,
}

#[derive(Serialize)]
struct ObjectiveSummary {
    objective: String,
    median_peak_error: f64,
    max_peak_error: usize,
}

#[derive(Serialize)]
struct Comparison {
    summary: Vec<ObjectiveSummary>,
    seeds: Vec<SeedSummary>,
}

/// `curves/<objective>/seed_<seed>.csv`
pub fn curve_path(out: &Path, objective: &str, seed: u64) -> std::path::PathBuf {
    out.join(CURVES_DIR).join(objective).join(format!("seed_{seed}.csv"))
}

pub fn run(cfg: &RewardExperiment, out: &Path) -> Result<()> {
    if cfg.objectives.is_empty() {
        return Err(CliError::Invalid("objectives must list at least one objective".into()));
    }
    for (k, o) in cfg.objectives.iter().enumerate() {
        if cfg.objectives[..k].contains(o) {
            return Err(CliError::Invalid(format!("objective {} listed twice", o.as_str())));
        }
    }
    if cfg.seeds == 0 {
        return Err(CliError::Invalid("seeds must be at least 1".into()));
    }
    let objectives: Vec<NamedObjective> = cfg.objectives.iter().map(|o| o.named(cfg.train.temperature)).collect();
    let seeds: Vec<u64> = (0..cfg.seeds).map(|k| cfg.seed.wrapping_add(k)).collect();
    let records: Vec<ComparisonRecord> = io::par_map(&seeds, |&seed| {
        let train = TrainConfig { seed, ..cfg.train.clone() };
        Ok(compare_objectives(&cfg.clip.spec(seed), &objectives, &train)?)
    })?;

    for rec in &records {
        for outcome in &rec.outcomes {
            let mut csv = Csv::new(&["frame_index", "timestamp", "raw_reward", "normalized_reward"]);
            for (i, (raw, norm)) in outcome.curve.raw.iter().zip(&outcome.curve.normalized).enumerate() {
                // synthetic clips are stamped 0..T
                csv.row(&[Cell::Int(i as u64 + 1), Cell::Int(i as u64), Cell::Float(*raw), Cell::Float(*norm)]);
            }
            csv.write(&curve_path(out, &outcome.name, rec.seed))?;
        }
    }

    let summary = objectives
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let errors: Vec<usize> = records.iter().map(|r| r.outcomes[k].peak_error).collect();
            ObjectiveSummary {
                objective: o.name.clone(),
                median_peak_error: median(&errors).expect("at least one seed"),
                max_peak_error: errors.iter().copied().max().unwrap_or(0),
            }
        })
        .collect();
    let seeds = records
        .iter()
        .map(|r| SeedSummary {
            seed: r.seed,
            completion_index: r.completion_index,
            peak_frames: r
                .outcomes
                .iter()
                .map(|o| Peak { objective: o.name.clone(), peak_frame: o.peak_frame, peak_error: o.peak_error })
                .collect(),
        })
        .collect();
    io::write_report(&out.join(COMPARISON_FILE), cfg, Comparison { summary, seeds })
}
