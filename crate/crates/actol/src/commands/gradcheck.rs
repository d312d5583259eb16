use std::path::Path;

use actol_core::gradients::{finite_diff_check, min_similarity_gap, LossSpec};
use actol_core::rng::derive_seed;
use actol_core::{random_shaped_clip, BridgeInterval, ClipSequence, TnceConfig};
use serde::Serialize;

use crate::config::{GradcheckExperiment, LossName};
use crate::error::{CliError, Result};
use crate::io;

pub const GRADCHECK_FILE: &str = "gradcheck.json";
const MAX_REDRAWS: u64 = 10_000;

#[derive(Serialize)]
struct LossResult {
    loss: &'static str,
    max_relative_error: f64,
    pass: bool,
}

#[derive(Serialize)]
struct Gradcheck {
    all_pass: bool,
    clips: u64,
    redraws: u64,
    losses: Vec<LossResult>,
}

fn spec(loss: LossName, clip: &ClipSequence, cfg: &GradcheckExperiment) -> LossSpec {
    let full = BridgeInterval::full(clip);
    match loss {
        LossName::Vlo => LossSpec::Vlo { temperature: cfg.temperature },
        LossName::Bb => LossSpec::Bb { interval: full },
        LossName::Actol => LossSpec::Actol { lambda: cfg.lambda, temperature: cfg.temperature, intervals: vec![full] },
        LossName::LastFrame => LossSpec::Tnce(TnceConfig::last_frame(cfg.temperature)),
        LossName::FutureFrame => LossSpec::Tnce(TnceConfig::future_frame(cfg.temperature)),
    }
}

/// Random clip for slot `k`, redrawn until its similarities keep the
/// configured distance from every kink. Returns the clip and the redraw count.
fn clip_for(cfg: &GradcheckExperiment, k: u64) -> Result<(ClipSequence, u64)> {
    let base = derive_seed(cfg.seed, k);
    for attempt in 0..MAX_REDRAWS {
        let clip = random_shaped_clip(
            cfg.min_frames..=cfg.max_frames,
            cfg.min_dim..=cfg.max_dim,
            3,
            derive_seed(base, attempt),
        )?;
        if min_similarity_gap(&clip)? >= cfg.min_similarity_gap {
            return Ok((clip, attempt));
        }
    }
    Err(CliError::Invalid(format!(
        "no clip with min_similarity_gap >= {} after {MAX_REDRAWS} draws",
        cfg.min_similarity_gap
    )))
}

pub fn run(cfg: &GradcheckExperiment, out: &Path) -> Result<bool> {
    if cfg.losses.is_empty() {
        return Err(CliError::Invalid("losses must list at least one loss".into()));
    }
    if cfg.clips == 0 {
        return Err(CliError::Invalid("clips must be at least 1".into()));
    }
    let slots: Vec<u64> = (0..cfg.clips).collect();
    let per_clip: Vec<(Vec<f64>, u64)> = io::par_map(&slots, |&k| {
        let (clip, redraws) = clip_for(cfg, k)?;
        let errors = cfg
            .losses
            .iter()
            .map(|&loss| finite_diff_check(&spec(loss, &clip, cfg), &clip, cfg.step))
            .collect::<actol_core::Result<Vec<_>>>()?;
        Ok((errors, redraws))
    })?;

    let losses: Vec<LossResult> = cfg
        .losses
        .iter()
        .enumerate()
        .map(|(i, &loss)| {
            let max = per_clip.iter().map(|(e, _)| e[i]).fold(0.0, f64::max);
            LossResult { loss: loss.as_str(), max_relative_error: max, pass: max < cfg.tolerance }
        })
        .collect();
    let all_pass = losses.iter().all(|l| l.pass);
    let redraws = per_clip.iter().map(|(_, r)| r).sum();
    io::write_report(&out.join(GRADCHECK_FILE), cfg, Gradcheck { all_pass, clips: cfg.clips, redraws, losses })?;
    Ok(all_pass)
}
