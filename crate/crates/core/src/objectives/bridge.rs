use alloc::vec::Vec;

use crate::embedding::ClipSequence;
use crate::error::{Error, Result};
use crate::math;

/// A pair of clip positions `start < end` whose frames pin a bridge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BridgeInterval {
    pub start: usize,
    pub end: usize,
}

impl BridgeInterval {
    pub fn new(start: usize, end: usize, clip_len: usize) -> Result<Self> {
        if start >= end || end >= clip_len {
            return Err(Error::InvalidInterval { start, end });
        }
        Ok(Self { start, end })
    }

    /// The interval spanning the whole clip.
    pub fn full(clip: &ClipSequence) -> Self {
        Self { start: 0, end: clip.len() - 1 }
    }

    /// Positions strictly inside the interval.
    pub fn interior(&self) -> core::ops::Range<usize> {
        self.start + 1..self.end
    }

    fn validate(&self, clip: &ClipSequence) -> Result<()> {
        Self::new(self.start, self.end, clip.len()).map(|_| ())
    }

    fn times(&self, clip: &ClipSequence) -> (u64, u64) {
        (clip.timestamps()[self.start], clip.timestamps()[self.end])
    }
}

fn check_time(t: u64, a: u64, b: u64) -> Result<()> {
    if a < b && (a..=b).contains(&t) {
        Ok(())
    } else {
        Err(Error::TimeOutsideInterval { t, start: a, end: b })
    }
}

/// Interpolation weight of `t` in `[a, b]`.
fn fraction(t: u64, a: u64, b: u64) -> f64 {
    (t - a) as f64 / (b - a) as f64
}

/// Bridge mean at time `t` for endpoint values pinned at times `a < b`.
pub fn bridge_mean(t: u64, a: u64, b: u64, v_a: &[f64], v_b: &[f64]) -> Result<Vec<f64>> {
    check_time(t, a, b)?;
    if v_a.len() != v_b.len() {
        return Err(Error::DimensionMismatch { expected: v_a.len(), found: v_b.len() });
    }
    let alpha = fraction(t, a, b);
    Ok(v_a.iter().zip(v_b).map(|(x, y)| (1.0 - alpha) * x + alpha * y).collect())
}

/// Bridge variance `(t - a)(b - t) / (b - a)` per coordinate.
pub fn bridge_variance(t: u64, a: u64, b: u64) -> Result<f64> {
    check_time(t, a, b)?;
    Ok((t - a) as f64 * (b - t) as f64 / (b - a) as f64)
}

pub fn bb_mean(t: u64, interval: BridgeInterval, clip: &ClipSequence) -> Result<Vec<f64>> {
    interval.validate(clip)?;
    let (a, b) = interval.times(clip);
    bridge_mean(t, a, b, clip.frame(interval.start), clip.frame(interval.end))
}

pub fn bb_variance(t: u64, interval: BridgeInterval, clip: &ClipSequence) -> Result<f64> {
    interval.validate(clip)?;
    let (a, b) = interval.times(clip);
    bridge_variance(t, a, b)
}

/// Mean over interior frames of `‖v_t - mean(t)‖² / (2 var(t))`.
///
/// Endpoints are pinned and excluded; an interval with no interior frames has
/// zero loss.
pub fn bb_loss(clip: &ClipSequence, interval: BridgeInterval) -> Result<f64> {
    interval.validate(clip)?;
    let (a, b) = interval.times(clip);
    let interior = interval.interior();
    if interior.is_empty() {
        return Ok(0.0);
    }
    let count = interior.len() as f64;
    let mut sum = 0.0;
    for p in interior {
        let t = clip.timestamps()[p];
        let mean = bridge_mean(t, a, b, clip.frame(interval.start), clip.frame(interval.end))?;
        sum += math::dist_sq(clip.frame(p), &mean) / (2.0 * bridge_variance(t, a, b)?);
    }
    Ok(sum / count)
}
