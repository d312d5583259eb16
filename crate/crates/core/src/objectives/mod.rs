//! Loss functions over a single clip.
//!
//! All reductions run in a fixed order (anchor-major, then positive, then
//! negative index ascending) so every value is bit-reproducible.

mod bridge;
mod contrastive;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::embedding::ClipSequence;
use crate::error::{Error, Result};

pub use bridge::{bb_loss, bb_mean, bb_variance, bridge_mean, bridge_variance, BridgeInterval};
pub(crate) use contrastive::{contrastive_eval, score_matrix};
pub use contrastive::{tnce_loss, vlo_loss, vlo_loss_on_scores};

/// Dense square matrix of pairwise scores, row = anchor.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoreMatrix {
    size: usize,
    values: Vec<f64>,
}

impl ScoreMatrix {
    pub fn zeros(size: usize) -> Self {
        Self { size, values: alloc::vec![0.0; size * size] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        let mut values = Vec::with_capacity(size * size);
        for row in rows {
            if row.len() != size {
                return Err(Error::LengthMismatch { what: "score row", expected: size, found: row.len() });
            }
            values.extend_from_slice(row);
        }
        Ok(Self { size, values })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.size + j] = v;
    }

    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.size + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.size).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Which frames act as positives for an anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PositiveSelector {
    /// The final frame is the goal for every other anchor.
    LastFrame,
    /// Every later frame is a goal for the anchor.
    FutureFrame,
    /// Every other frame, paired with the anchor.
    VloPair,
}

/// Which frames enter the softmax denominator for an (anchor, positive) instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NegativeSelector {
    /// All frames except the anchor.
    OtherFrames,
    /// Frames at least as far from the anchor as the positive.
    FartherFrames,
}

/// How an (anchor, frame) pair is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScoreKind {
    /// Cosine similarity of the frame with the language, ignoring the anchor.
    DirectSim,
    /// Negative absolute difference of anchor and frame similarities.
    DifferenceScore,
}

/// One member of the time-contrastive InfoNCE family.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TnceConfig {
    pub positive: PositiveSelector,
    pub negative: NegativeSelector,
    pub score: ScoreKind,
    pub temperature: f64,
}

impl TnceConfig {
    /// The ordering loss expressed as a family member.
    pub fn vlo(temperature: f64) -> Self {
        Self {
            positive: PositiveSelector::VloPair,
            negative: NegativeSelector::FartherFrames,
            score: ScoreKind::DifferenceScore,
            temperature,
        }
    }

    /// Goal-reaching baseline: language aligned with the last frame.
    pub fn last_frame(temperature: f64) -> Self {
        Self {
            positive: PositiveSelector::LastFrame,
            negative: NegativeSelector::OtherFrames,
            score: ScoreKind::DirectSim,
            temperature,
        }
    }

    /// Goal-reaching baseline: language aligned with any future frame.
    pub fn future_frame(temperature: f64) -> Self {
        Self {
            positive: PositiveSelector::FutureFrame,
            negative: NegativeSelector::OtherFrames,
            score: ScoreKind::DirectSim,
            temperature,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        check_temperature(self.temperature)
    }
}

pub(crate) fn check_temperature(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::param("temperature", "must be positive and finite"))
    }
}

/// Per-step record of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossBreakdown {
    pub vlo: f64,
    pub bb: f64,
    pub total: f64,
    pub lower_bound: f64,
    /// `vlo - lower_bound`
    pub gap: f64,
}

/// Unique sorted temporal distances from one anchor, with multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DistanceProfile {
    pub anchor: usize,
    pub sorted_distances: Vec<u64>,
    pub multiplicities: Vec<usize>,
}

impl DistanceProfile {
    pub fn levels(&self) -> usize {
        self.sorted_distances.len()
    }
}

/// `{ k != i : |n(i) - n(k)| >= |n(i) - n(j)| }`, ascending. Always contains `j`.
pub fn negative_set(clip: &ClipSequence, i: usize, j: usize) -> Result<Vec<usize>> {
    clip.check_index(i)?;
    clip.check_index(j)?;
    if i == j {
        return Err(Error::SameIndex(i));
    }
    let dij = clip.distance(i, j);
    Ok((0..clip.len()).filter(|&k| k != i && clip.distance(i, k) >= dij).collect())
}

pub fn distance_profile(clip: &ClipSequence, i: usize) -> Result<DistanceProfile> {
    clip.check_index(i)?;
    Ok(profile_for(clip.timestamps(), i))
}

pub(crate) fn profile_for(timestamps: &[u64], i: usize) -> DistanceProfile {
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for (k, &t) in timestamps.iter().enumerate() {
        if k != i {
            *counts.entry(t.abs_diff(timestamps[i])).or_default() += 1;
        }
    }
    let (sorted_distances, multiplicities) = counts.into_iter().unzip();
    DistanceProfile { anchor: i, sorted_distances, multiplicities }
}

/// Combinatorial infimum of the ordering loss for the clip's timestamps.
pub fn lower_bound(clip: &ClipSequence) -> f64 {
    lower_bound_for_timestamps(clip.timestamps())
}

/// `(1 / T(T-1)) * sum_i sum_m n_im log n_im`
pub fn lower_bound_for_timestamps(timestamps: &[u64]) -> f64 {
    let t = timestamps.len();
    if t < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..t {
        for &n in &profile_for(timestamps, i).multiplicities {
            let n = n as f64;
            acc += n * libm::log(n);
        }
    }
    acc / (t * (t - 1)) as f64
}

/// Ordering loss, bridge loss (averaged over `intervals`) and their weighted sum.
pub fn actol_loss(
    clip: &ClipSequence,
    lambda: f64,
    temperature: f64,
    intervals: &[BridgeInterval],
) -> Result<LossBreakdown> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::param("lambda", "must be finite and non-negative"));
    }
    if intervals.is_empty() {
        return Err(Error::param("intervals", "at least one bridge interval is required"));
    }
    let vlo = vlo_loss(clip, temperature)?;
    let mut bb = 0.0;
    for iv in intervals {
        bb += bb_loss(clip, *iv)?;
    }
    bb /= intervals.len() as f64;
    let lb = lower_bound(clip);
    Ok(LossBreakdown { vlo, bb, total: vlo + lambda * bb, lower_bound: lb, gap: vlo - lb })
}
