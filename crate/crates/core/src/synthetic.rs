//! Toy clips with known ground truth.
//!
//! Frames travel along great circles of the unit sphere: from a random start
//! toward the language embedding until the action completes, then according
//! to the tail mode. Timestamps are `0..T`.

use alloc::vec::Vec;
use core::ops::RangeInclusive;

use rand::Rng;

use crate::embedding::{normalize, ClipSequence, EmbeddingVector};
use crate::error::{Error, Result};
use crate::math;
use crate::objectives::bridge_variance;
use crate::rng::{gaussian_vec, seeded, unit_vector};

/// What the clip shows after the instructed action has finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TailMode {
    /// No tail: the action spans the whole clip and completes on the last frame.
    None,
    /// The completed state is held still.
    Frozen,
    /// The scene moves away from the instruction again.
    DriftAway,
    /// An unrelated action toward a second random direction.
    SecondAction,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticClipSpec {
    pub frames: usize,
    pub dim: usize,
    /// 1-based frame at which the instructed action finishes.
    pub completion_index: usize,
    pub tail_mode: TailMode,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticClipSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(Error::TooFewFrames { min: 2, found: self.frames });
        }
        if self.dim < 2 {
            return Err(Error::DimensionTooSmall(self.dim));
        }
        if !(1..=self.frames).contains(&self.completion_index) {
            return Err(Error::param("completion_index", "must lie in [1, frames]"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::param("noise_sigma", "must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruth {
    /// 1-based completion frame; equals `T` when the tail mode is `None`.
    pub completion_index: usize,
    /// Fraction of the instructed action completed at each frame.
    pub progress: Vec<f64>,
}

/// Random unit vector orthogonal to the unit vector `p`.
fn tangent(rng: &mut impl Rng, p: &[f64]) -> Vec<f64> {
    loop {
        let mut g = gaussian_vec(rng, p.len());
        math::project_tangent(&mut g, p);
        if let Ok(u) = normalize(&g) {
            return u.into_inner();
        }
    }
}

/// `cos(angle) * p + sin(angle) * u`
fn along(p: &[f64], u: &[f64], angle: f64) -> Vec<f64> {
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    p.iter().zip(u).map(|(a, b)| c * a + s * b).collect()
}

/// Spherical interpolation between unit vectors.
fn slerp(a: &[f64], b: &[f64], f: f64) -> Vec<f64> {
    let theta = libm::acos(math::dot(a, b).clamp(-1.0, 1.0));
    if theta < 1e-12 {
        return a.to_vec();
    }
    let s = libm::sin(theta);
    let wa = libm::sin((1.0 - f) * theta) / s;
    let wb = libm::sin(f * theta) / s;
    a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect()
}

/// Generates a clip and its ground truth. Deterministic in `spec.seed`.
pub fn generate_clip(spec: &SyntheticClipSpec) -> Result<(ClipSequence, GroundTruth)> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let t_len = spec.frames;
    let completion = match spec.tail_mode {
        TailMode::None => t_len,
        _ => spec.completion_index,
    };

    let language = unit_vector(&mut rng, spec.dim);
    let l = language.as_slice();
    let approach_dir = tangent(&mut rng, l);
    let start_angle = rng.random_range(0.4..0.6) * core::f64::consts::PI;
    let tail_dir = tangent(&mut rng, l);
    let second_goal = unit_vector(&mut rng, spec.dim);

    let approach_steps = (completion - 1).max(1) as f64;
    let tail_steps = (t_len - completion).max(1) as f64;
    let mut raw = Vec::with_capacity(t_len);
    let mut progress = Vec::with_capacity(t_len);
    for f in 1..=t_len {
        if f <= completion {
            let p = if completion == 1 { 1.0 } else { (f - 1) as f64 / approach_steps };
            raw.push(along(l, &approach_dir, start_angle * (1.0 - p)));
            progress.push(p);
            continue;
        }
        let q = (f - completion) as f64;
        match spec.tail_mode {
            TailMode::None | TailMode::Frozen => {
                raw.push(l.to_vec());
                progress.push(1.0);
            }
            TailMode::DriftAway => {
                // retreat at the approach speed, capped at the antipode
                let angle = (start_angle * q / approach_steps).min(core::f64::consts::PI);
                raw.push(along(l, &tail_dir, angle));
                progress.push((1.0 - angle / start_angle).max(0.0));
            }
            TailMode::SecondAction => {
                raw.push(slerp(l, second_goal.as_slice(), q / tail_steps));
                progress.push(1.0);
            }
        }
    }

    let frames = raw
        .into_iter()
        .map(|mut v| {
            if spec.noise_sigma > 0.0 {
                let noise = gaussian_vec(&mut rng, spec.dim);
                math::axpy(spec.noise_sigma, &noise, &mut v);
            }
            normalize(&v)
        })
        .collect::<Result<Vec<_>>>()?;
    let clip = ClipSequence::new((0..t_len as u64).collect(), frames, language)?;
    Ok((clip, GroundTruth { completion_index: completion, progress }))
}

/// Clip of independent uniform unit frames and language, for property tests
/// and training initialisation.
pub fn random_clip(timestamps: &[u64], dim: usize, seed: u64) -> ClipSequence {
    let mut rng = seeded(seed);
    let language = unit_vector(&mut rng, dim);
    let frames = timestamps.iter().map(|_| unit_vector(&mut rng, dim)).collect();
    ClipSequence::new(timestamps.to_vec(), frames, language).expect("valid random clip")
}

/// Random clip whose frame count and dimension are drawn uniformly from the
/// given ranges, with strictly increasing timestamps whose gaps are drawn
/// from `1..=max_gap` (so some clips contain tied distances).
pub fn random_shaped_clip(
    frames: RangeInclusive<usize>,
    dims: RangeInclusive<usize>,
    max_gap: u64,
    seed: u64,
) -> Result<ClipSequence> {
    if *frames.start() < 2 || frames.is_empty() {
        return Err(Error::param("frames", "range must be non-empty with at least 2 frames"));
    }
    if *dims.start() < 2 || dims.is_empty() {
        return Err(Error::param("dims", "range must be non-empty with dimension at least 2"));
    }
    if max_gap == 0 {
        return Err(Error::param("max_gap", "must be at least 1"));
    }
    let mut rng = seeded(seed);
    let t = rng.random_range(frames);
    let d = rng.random_range(dims);
    let mut timestamps = Vec::with_capacity(t);
    let mut now = 0;
    for _ in 0..t {
        timestamps.push(now);
        now += rng.random_range(1..=max_gap);
    }
    let language = unit_vector(&mut rng, d);
    let frames = (0..t).map(|_| unit_vector(&mut rng, d)).collect();
    ClipSequence::new(timestamps, frames, language)
}

/// Draws a point for every time in `times` from the bridge marginal pinned at
/// `v_start` (first time) and `v_end` (last time). Coordinates are
/// independent; endpoints are returned exactly.
pub fn sample_bridge(v_start: &[f64], v_end: &[f64], times: &[u64], seed: u64) -> Result<Vec<Vec<f64>>> {
    sample_bridge_with(v_start, v_end, times, &mut seeded(seed))
}

pub fn sample_bridge_with(v_start: &[f64], v_end: &[f64], times: &[u64], rng: &mut impl Rng) -> Result<Vec<Vec<f64>>> {
    if times.len() < 2 {
        return Err(Error::TooFewFrames { min: 2, found: times.len() });
    }
    let (a, b) = (times[0], times[times.len() - 1]);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let mut p = crate::objectives::bridge_mean(t, a, b, v_start, v_end)?;
        let sd = libm::sqrt(bridge_variance(t, a, b)?);
        if sd > 0.0 {
            for c in p.iter_mut() {
                *c += sd * rng.sample::<f64, _>(rand_distr::StandardNormal);
            }
        }
        out.push(p);
    }
    Ok(out)
}

/// A clip whose frames are one bridge draw between `v_start` and `v_end`.
pub fn sample_bridge_clip(
    v_start: &[f64],
    v_end: &[f64],
    times: &[u64],
    language: EmbeddingVector,
    seed: u64,
) -> Result<ClipSequence> {
    let frames = sample_bridge(v_start, v_end, times, seed)?
        .into_iter()
        .map(EmbeddingVector::new)
        .collect::<Result<Vec<_>>>()?;
    ClipSequence::new(times.to_vec(), frames, language)
}

/// Unit vector within Euclidean distance `delta` of `l`, in a random tangent
/// direction at a random distance in `(0, delta]`.
pub fn perturb_language(l: &EmbeddingVector, delta: f64, seed: u64) -> Result<EmbeddingVector> {
    perturb_language_with(l, delta, &mut seeded(seed))
}

pub fn perturb_language_with(l: &EmbeddingVector, delta: f64, rng: &mut impl Rng) -> Result<EmbeddingVector> {
    if !(delta.is_finite() && (0.0..=2.0).contains(&delta)) {
        return Err(Error::param("delta", "must lie in [0, 2]"));
    }
    let l = l.normalized()?;
    if delta == 0.0 {
        return Ok(l);
    }
    let u = tangent(rng, l.as_slice());
    let target = delta * (1.0 - rng.random::<f64>());
    // chord length r corresponds to the geodesic angle 2 asin(r / 2)
    let mut angle = 2.0 * libm::asin((target / 2.0).min(1.0));
    loop {
        let cand = normalize(&along(l.as_slice(), &u, angle))?;
        if libm::sqrt(math::dist_sq(cand.as_slice(), l.as_slice())) <= delta {
            return Ok(cand);
        }
        angle *= 1.0 - 1e-12;
    }
}
