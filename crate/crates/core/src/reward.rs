//! Language-conditioned reward curves and the objective comparison on
//! synthetic clips with distracting tails.

use alloc::string::String;
use alloc::vec::Vec;

use crate::embedding::ClipSequence;
use crate::error::Result;
use crate::synthetic::{generate_clip, SyntheticClipSpec};
use crate::trainer::{train_free_with, Objective, TrainConfig};

/// Per-frame reward `cos(v_t, l)` and its per-clip min-max normalisation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RewardCurve {
    pub raw: Vec<f64>,
    /// In `[0, 1]`; all zeros when the raw curve is constant.
    pub normalized: Vec<f64>,
    /// 1-based frame of the maximum raw reward, earliest on ties.
    pub peak_frame: usize,
}

pub fn reward_curve(clip: &ClipSequence) -> Result<RewardCurve> {
    Ok(reward_curve_from(clip.similarities()?))
}

pub fn reward_curve_from(raw: Vec<f64>) -> RewardCurve {
    let normalized = min_max(&raw);
    let mut peak = 0;
    for (i, &r) in raw.iter().enumerate() {
        if r > raw[peak] {
            peak = i;
        }
    }
    RewardCurve { raw, normalized, peak_frame: peak + 1 }
}

fn min_max(xs: &[f64]) -> Vec<f64> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range.is_nan() || range <= 0.0 {
        return alloc::vec![0.0; xs.len()];
    }
    xs.iter().map(|x| ((x - lo) / range).clamp(0.0, 1.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NamedObjective {
    pub name: String,
    pub objective: Objective,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObjectiveOutcome {
    pub name: String,
    pub peak_frame: usize,
    /// `|peak_frame - completion_index|`
    pub peak_error: usize,
    pub curve: RewardCurve,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonRecord {
    pub seed: u64,
    pub completion_index: usize,
    pub outcomes: Vec<ObjectiveOutcome>,
}

/// Trains the generated clip under each objective from the same starting
/// embeddings and reports where each trained reward curve peaks.
pub fn compare_objectives(
    spec: &SyntheticClipSpec,
    objectives: &[NamedObjective],
    cfg: &TrainConfig,
) -> Result<ComparisonRecord> {
    let (clip, truth) = generate_clip(spec)?;
    let mut outcomes = Vec::with_capacity(objectives.len());
    for named in objectives {
        let history = train_free_with(&clip, cfg, &named.objective)?;
        let curve = reward_curve(&history.final_clip)?;
        outcomes.push(ObjectiveOutcome {
            name: named.name.clone(),
            peak_frame: curve.peak_frame,
            peak_error: curve.peak_frame.abs_diff(truth.completion_index),
            curve,
        });
    }
    Ok(ComparisonRecord { seed: spec.seed, completion_index: truth.completion_index, outcomes })
}

/// Median of `values`, averaging the two middle elements for even counts.
pub fn median(values: &[usize]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] as f64 } else { (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::TailMode;
    use alloc::vec;

    #[test]
    fn constant_curve_normalizes_to_zero() {
        let c = reward_curve_from(vec![0.3; 5]);
        assert_eq!(c.normalized, vec![0.0; 5]);
        assert_eq!(c.peak_frame, 1);
    }

    #[test]
    fn normalization_preserves_peak_and_is_idempotent() {
        let c = reward_curve_from(vec![0.1, -0.4, 0.9, 0.9, 0.2]);
        assert_eq!(c.peak_frame, 3);
        assert_eq!(reward_curve_from(c.normalized.clone()).peak_frame, 3);
        assert_eq!(min_max(&c.normalized), c.normalized);
        assert!(c.normalized.iter().all(|x| (0.0..=1.0).contains(x)));
        assert_eq!(c.normalized.iter().copied().fold(0.0, f64::max), 1.0);
    }

    #[test]
    fn synthetic_peaks() {
        for seed in 0..10 {
            let spec = SyntheticClipSpec {
                frames: 10,
                dim: 6,
                completion_index: 10,
                tail_mode: TailMode::None,
                noise_sigma: 0.0,
                seed,
            };
            assert_eq!(reward_curve(&generate_clip(&spec).unwrap().0).unwrap().peak_frame, 10);
            let drift = SyntheticClipSpec { completion_index: 5, tail_mode: TailMode::DriftAway, ..spec };
            assert_eq!(reward_curve(&generate_clip(&drift).unwrap().0).unwrap().peak_frame, 5);
        }
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[3, 1, 2]), Some(2.0));
        assert_eq!(median(&[4, 1, 3, 2]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
