use std::path::Path;

use actol_core::rng::{derive_seed, seeded, unit_vector};
use actol_core::synthetic::sample_bridge_clip;
use actol_core::{
    check_bridge_statistics, check_continuity, check_lipschitz, check_lower_bound, check_robustness_random,
    check_tightness, ordering_emergence_run, random_shaped_clip, BridgeStatsConfig, EmergenceOutcome, TheoremReport,
};
use serde::Serialize;

use crate::config::{CheckName, VerifyExperiment};
use crate::error::{CliError, Result};
use crate::io;

pub const REPORTS_FILE: &str = "theorem_reports.json";

#[derive(Serialize)]
struct Reports {
    all_pass: bool,
    reports: Vec<TheoremReport>,
}

/// Runs every configured check, writes the reports and returns whether all passed.
pub fn run(cfg: &VerifyExperiment, out: &Path) -> Result<bool> {
    if cfg.checks.is_empty() {
        return Err(CliError::Invalid("checks must list at least one check".into()));
    }
    let mut reports = Vec::new();
    for (index, check) in cfg.checks.iter().enumerate() {
        let seed = derive_seed(cfg.seed, index as u64);
        match check {
            CheckName::LowerBound => reports.push(lower_bound(cfg, seed)?),
            CheckName::Tightness => reports.push(check_tightness(&cfg.tightness.timestamps, &cfg.tightness.epsilons)?),
            CheckName::Lipschitz => reports.push(check_lipschitz(cfg.lipschitz.trials, cfg.lipschitz.dim, seed)?),
            CheckName::Continuity => reports.push(continuity(cfg, seed)?),
            CheckName::Robustness => {
                let p = &cfg.robustness;
                for (k, &delta) in p.deltas.iter().enumerate() {
                    let r = check_robustness_random(p.dim, delta, p.trials, derive_seed(seed, k as u64))?;
                    reports.push(r.with_measurement("delta", delta));
                }
            }
            CheckName::BridgeStatistics => {
                let p = &cfg.bridge_statistics;
                reports.push(check_bridge_statistics(&BridgeStatsConfig {
                    dim: p.dim,
                    length: p.length,
                    samples: p.samples,
                    seed,
                    variance_tolerance: p.variance_tolerance,
                    flip_variance_sign: cfg.debug.flip_variance_sign,
                })?)
            }
            CheckName::OrderingEmergence => reports.push(ordering(cfg, seed)?),
        }
    }
    let all_pass = reports.iter().all(|r| r.pass);
    io::write_report(&out.join(REPORTS_FILE), cfg, Reports { all_pass, reports })?;
    Ok(all_pass)
}

fn lower_bound(cfg: &VerifyExperiment, seed: u64) -> Result<TheoremReport> {
    let p = &cfg.lower_bound;
    let clips = (0..p.clips)
        .map(|k| {
            random_shaped_clip(p.min_frames..=p.max_frames, p.min_dim..=p.max_dim, p.max_gap, derive_seed(seed, k))
        })
        .collect::<actol_core::Result<Vec<_>>>()?;
    Ok(check_lower_bound(&clips, p.temperature)?)
}

fn continuity(cfg: &VerifyExperiment, seed: u64) -> Result<TheoremReport> {
    let p = &cfg.continuity;
    if p.frames < 3 {
        return Err(CliError::Invalid("continuity.frames must be at least 3".into()));
    }
    let times: Vec<u64> = (0..p.frames as u64).collect();
    let pairs: Vec<(usize, usize)> =
        (0..p.frames).flat_map(|k| (0..p.frames).filter(move |&l| l != k).map(move |l| (k, l))).collect();
    let mut total = TheoremReport::empty("continuity");
    let mut worst_ratio: f64 = 0.0;
    for c in 0..p.clips {
        let mut rng = seeded(derive_seed(seed, c));
        if p.dim < 2 {
            return Err(actol_core::Error::DimensionTooSmall(p.dim).into());
        }
        let (a, b, l) = (unit_vector(&mut rng, p.dim), unit_vector(&mut rng, p.dim), unit_vector(&mut rng, p.dim));
        let clip = sample_bridge_clip(a.as_slice(), b.as_slice(), &times, l, derive_seed(seed, c).wrapping_add(1))?;
        let r = check_continuity(&clip, &pairs)?;
        worst_ratio = worst_ratio.max(r.measurement("deviation_ratio").unwrap_or(0.0));
        total.absorb(&r);
    }
    Ok(total.with_measurement("max_deviation_ratio", worst_ratio))
}

fn ordering(cfg: &VerifyExperiment, seed: u64) -> Result<TheoremReport> {
    let p = &cfg.ordering_emergence;
    let seeds: Vec<u64> = (0..p.seeds).map(|k| derive_seed(seed, k)).collect();
    let outcomes: Vec<EmergenceOutcome> =
        io::par_map(&seeds, |&s| Ok(ordering_emergence_run(&p.timestamps, p.dim, &p.train, s)?))?;
    let passed = outcomes.iter().filter(|o| o.passes(p.gap_threshold)).count() as u64;
    let mut report = TheoremReport::empty("ordering-emergence");
    report.instances = outcomes.len();
    report.violations = outcomes.len() - passed as usize;
    report.worst_slack = outcomes.iter().map(|o| p.gap_threshold - o.final_gap).fold(f64::INFINITY, f64::min);
    report.pass = passed >= p.required;
    let max_gap = outcomes.iter().map(|o| o.final_gap).fold(f64::NEG_INFINITY, f64::max);
    Ok(report.with_measurement("passed_seeds", passed as f64).with_measurement("max_final_gap", max_gap))
}
