//! Projected gradient descent on the unit sphere.
//!
//! Each step evaluates the objective, projects every frame gradient onto the
//! tangent space at that frame, takes a fixed-size step and re-normalises.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::embedding::{normalize, ClipSequence, EmbeddingVector};
use crate::error::{Error, Result};
use crate::gradients::{grad_tnce, grad_total, GradientSet};
use crate::math;
use crate::objectives::{
    actol_loss, bb_loss, check_temperature, lower_bound, score_matrix, tnce_loss, vlo_loss, BridgeInterval,
    LossBreakdown, ScoreKind, ScoreMatrix, TnceConfig,
};
use crate::rng::{gaussian_vec, seeded};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub lambda: f64,
    pub temperature: f64,
    pub seed: u64,
    pub optimize_language: bool,
    /// `1` trains on the full-clip bridge; larger values sample that many
    /// random sub-intervals per step.
    pub intervals_per_step: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            steps: 1000,
            lambda: crate::DEFAULT_BRIDGE_WEIGHT,
            temperature: 1.0,
            seed: 0,
            optimize_language: false,
            intervals_per_step: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::param("learning_rate", "must be finite and non-negative"));
        }
        if self.steps == 0 {
            return Err(Error::param("steps", "must be at least 1"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::param("lambda", "must be finite and non-negative"));
        }
        if self.intervals_per_step == 0 {
            return Err(Error::param("intervals_per_step", "must be at least 1"));
        }
        check_temperature(self.temperature)
    }
}

/// What the trainer minimises.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Objective {
    /// Ordering loss plus `lambda` times the bridge loss, from the config.
    Actol,
    /// A single member of the contrastive family, no bridge term.
    Tnce(TnceConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// Loss before each update, one record per step.
    pub records: Vec<LossBreakdown>,
    pub final_clip: ClipSequence,
    pub vlo_gap: Vec<f64>,
}

impl TrainHistory {
    pub fn last(&self) -> &LossBreakdown {
        self.records.last().expect("history is never empty")
    }
}

fn step_intervals(len: usize, count: usize, rng: &mut impl Rng) -> Vec<BridgeInterval> {
    if count == 1 {
        return vec![BridgeInterval { start: 0, end: len - 1 }];
    }
    (0..count)
        .map(|_| {
            let start = rng.random_range(0..len - 1);
            let end = rng.random_range(start + 1..len);
            BridgeInterval { start, end }
        })
        .collect()
}

fn evaluate(
    clip: &ClipSequence,
    cfg: &TrainConfig,
    objective: &Objective,
    intervals: &[BridgeInterval],
) -> Result<(LossBreakdown, GradientSet)> {
    match objective {
        Objective::Actol => Ok((
            actol_loss(clip, cfg.lambda, cfg.temperature, intervals)?,
            grad_total(clip, cfg.lambda, cfg.temperature, intervals)?,
        )),
        Objective::Tnce(tc) => {
            let vlo = vlo_loss(clip, tc.temperature)?;
            let mut bb = 0.0;
            for iv in intervals {
                bb += bb_loss(clip, *iv)?;
            }
            let lb = lower_bound(clip);
            let rec = LossBreakdown {
                vlo,
                bb: bb / intervals.len() as f64,
                total: tnce_loss(clip, tc)?,
                lower_bound: lb,
                gap: vlo - lb,
            };
            Ok((rec, grad_tnce(clip, tc)?))
        }
    }
}

fn check_finite(rec: &LossBreakdown, grad: &GradientSet, step: usize) -> Result<()> {
    if rec.total.is_finite() && rec.vlo.is_finite() && rec.bb.is_finite() && grad.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteLoss { step })
    }
}

/// One Riemannian gradient step on the sphere, in place.
fn sphere_step(v: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
    let mut g = grad.to_vec();
    math::project_tangent(&mut g, v);
    math::axpy(-lr, &g, v);
    let unit = normalize(v)?;
    v.copy_from_slice(unit.as_slice());
    Ok(())
}

/// Trains free frame embeddings under the combined objective.
pub fn train_free(clip_init: &ClipSequence, cfg: &TrainConfig) -> Result<TrainHistory> {
    train_free_with(clip_init, cfg, &Objective::Actol)
}

/// Trains free frame embeddings under any supported objective.
pub fn train_free_with(clip_init: &ClipSequence, cfg: &TrainConfig, objective: &Objective) -> Result<TrainHistory> {
    cfg.validate()?;
    if let Objective::Tnce(tc) = objective {
        tc.validate()?;
    }
    let mut clip = clip_init.normalized()?;
    let mut rng = seeded(cfg.seed);
    let mut records = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let intervals = step_intervals(clip.len(), cfg.intervals_per_step, &mut rng);
        let (rec, grad) = evaluate(&clip, cfg, objective, &intervals)?;
        check_finite(&rec, &grad, step)?;
        records.push(rec);
        for (p, g) in grad.frames.iter().enumerate() {
            sphere_step(clip.frame_mut(p), g, cfg.learning_rate)?;
        }
        if cfg.optimize_language {
            sphere_step(clip.language_mut(), &grad.language, cfg.learning_rate)?;
        }
    }
    let vlo_gap = records.iter().map(|r| r.gap).collect();
    Ok(TrainHistory { records, final_clip: clip, vlo_gap })
}

/// Linear map from raw features to embeddings, followed by normalisation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearEncoder {
    pub input_dim: usize,
    pub output_dim: usize,
    /// Row-major `output_dim x input_dim`.
    pub weights: Vec<f64>,
}

impl LinearEncoder {
    pub fn identity(dim: usize) -> Self {
        let mut weights = vec![0.0; dim * dim];
        for i in 0..dim {
            weights[i * dim + i] = 1.0;
        }
        Self { input_dim: dim, output_dim: dim, weights }
    }

    /// Gaussian weights scaled by `1/sqrt(input_dim)`.
    pub fn random(input_dim: usize, output_dim: usize, seed: u64) -> Self {
        let scale = 1.0 / libm::sqrt(input_dim as f64);
        let weights = gaussian_vec(&mut seeded(seed), input_dim * output_dim).into_iter().map(|w| w * scale).collect();
        Self { input_dim, output_dim, weights }
    }

    /// Unnormalised output `W x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, found: x.len() });
        }
        Ok(self.weights.chunks(self.input_dim).map(|row| math::dot(row, x)).collect())
    }

    pub fn encode(&self, x: &[f64]) -> Result<EmbeddingVector> {
        normalize(&self.project(x)?)
    }
}

fn encode_clip(
    enc: &LinearEncoder,
    features: &[Vec<f64>],
    timestamps: &[u64],
    language: &EmbeddingVector,
) -> Result<(ClipSequence, Vec<Vec<f64>>)> {
    let raw = features.iter().map(|x| enc.project(x)).collect::<Result<Vec<_>>>()?;
    let frames = raw.iter().map(|u| normalize(u)).collect::<Result<Vec<_>>>()?;
    Ok((ClipSequence::new(timestamps.to_vec(), frames, language.clone())?, raw))
}

/// Objective value and gradient with respect to the encoder weights
/// (row-major, same layout as [`LinearEncoder::weights`]).
pub fn encoder_loss_and_grad(
    enc: &LinearEncoder,
    features: &[Vec<f64>],
    timestamps: &[u64],
    language: &EmbeddingVector,
    cfg: &TrainConfig,
) -> Result<(LossBreakdown, Vec<f64>, GradientSet)> {
    let (clip, raw) = encode_clip(enc, features, timestamps, language)?;
    let intervals = [BridgeInterval::full(&clip)];
    let (rec, grad) = evaluate(&clip, cfg, &Objective::Actol, &intervals)?;
    Ok((rec, weight_gradient(enc, features, &clip, &raw, &grad), grad))
}

/// Chains frame gradients through `v = u / |u|` and `u = W x`.
fn weight_gradient(
    enc: &LinearEncoder,
    features: &[Vec<f64>],
    clip: &ClipSequence,
    raw: &[Vec<f64>],
    grad: &GradientSet,
) -> Vec<f64> {
    let mut dw = vec![0.0; enc.weights.len()];
    for (t, x) in features.iter().enumerate() {
        let mut du = grad.frames[t].clone();
        math::project_tangent(&mut du, clip.frame(t));
        let inv = 1.0 / math::norm(&raw[t]);
        for (r, dur) in du.iter().enumerate() {
            math::axpy(dur * inv, x, &mut dw[r * enc.input_dim..(r + 1) * enc.input_dim]);
        }
    }
    dw
}

/// Trains a linear encoder from identity (square) or seeded random weights.
pub fn train_encoder(
    features: &[Vec<f64>],
    timestamps: &[u64],
    language: &EmbeddingVector,
    cfg: &TrainConfig,
) -> Result<(LinearEncoder, TrainHistory)> {
    let f = features.first().map(Vec::len).ok_or(Error::TooFewFrames { min: 2, found: 0 })?;
    let init = if f == language.dim() {
        LinearEncoder::identity(f)
    } else {
        LinearEncoder::random(f, language.dim(), cfg.seed)
    };
    train_encoder_from(init, features, timestamps, language, cfg)
}

pub fn train_encoder_from(
    mut enc: LinearEncoder,
    features: &[Vec<f64>],
    timestamps: &[u64],
    language: &EmbeddingVector,
    cfg: &TrainConfig,
) -> Result<(LinearEncoder, TrainHistory)> {
    cfg.validate()?;
    if enc.output_dim != language.dim() {
        return Err(Error::DimensionMismatch { expected: language.dim(), found: enc.output_dim });
    }
    let mut language = language.normalized()?;
    let mut records = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let (clip, raw) = encode_clip(&enc, features, timestamps, &language)?;
        let intervals = [BridgeInterval::full(&clip)];
        let (rec, grad) = evaluate(&clip, cfg, &Objective::Actol, &intervals)?;
        check_finite(&rec, &grad, step)?;
        records.push(rec);
        let dw = weight_gradient(&enc, features, &clip, &raw, &grad);
        math::axpy(-cfg.learning_rate, &dw, &mut enc.weights);
        if cfg.optimize_language {
            let mut l = language.clone().into_inner();
            sphere_step(&mut l, &grad.language, cfg.learning_rate)?;
            language = EmbeddingVector::new(l)?;
        }
    }
    let (final_clip, _) = encode_clip(&enc, features, timestamps, &language)?;
    let vlo_gap = records.iter().map(|r| r.gap).collect();
    Ok((enc, TrainHistory { records, final_clip, vlo_gap }))
}

/// Extreme values of the ordering conditions over all `(i, j, k)` triples.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrderingMargins {
    /// `min (S_ij - S_ik)` over triples with `d_ij < d_ik`; `None` if there are none.
    pub min_order_margin: Option<f64>,
    /// `max |S_ij - S_ik|` over triples with `d_ij == d_ik`; `None` if there are none.
    pub max_tie_spread: Option<f64>,
}

impl OrderingMargins {
    /// Closer frames strictly outscore farther ones from every anchor.
    pub fn ordered(&self) -> bool {
        self.min_order_margin.is_none_or(|m| m > 0.0)
    }
}

/// Visits every anchor `i` and distinct pair `j, k` (both `!= i`).
fn for_each_triple(t: usize, mut f: impl FnMut(usize, usize, usize)) {
    for i in 0..t {
        for j in (0..t).filter(|&j| j != i) {
            for k in (0..t).filter(|&k| k != i && k != j) {
                f(i, j, k);
            }
        }
    }
}

pub fn ordering_margins(timestamps: &[u64], scores: &ScoreMatrix) -> OrderingMargins {
    let mut out = OrderingMargins { min_order_margin: None, max_tie_spread: None };
    for_each_triple(timestamps.len(), |i, j, k| {
        let dij = timestamps[i].abs_diff(timestamps[j]);
        let dik = timestamps[i].abs_diff(timestamps[k]);
        let diff = scores.get(i, j) - scores.get(i, k);
        if dij < dik {
            out.min_order_margin = Some(out.min_order_margin.map_or(diff, |m| m.min(diff)));
        } else if dij == dik {
            let spread = libm::fabs(diff);
            out.max_tie_spread = Some(out.max_tie_spread.map_or(spread, |m| m.max(spread)));
        }
    });
    out
}

/// Pairwise scores as the loss sees them: alignment scores divided by the temperature.
pub fn tempered_scores(clip: &ClipSequence, temperature: f64) -> Result<ScoreMatrix> {
    check_temperature(temperature)?;
    let mut s = score_matrix(&clip.similarities()?, ScoreKind::DifferenceScore);
    for i in 0..clip.len() {
        for k in 0..clip.len() {
            s.set(i, k, s.get(i, k) / temperature);
        }
    }
    Ok(s)
}

/// Whether every ordering condition holds at `delta` for the given scores.
pub fn satisfies_vlo(timestamps: &[u64], scores: &ScoreMatrix, delta: f64) -> bool {
    let mut ok = true;
    for_each_triple(timestamps.len(), |i, j, k| {
        let dij = timestamps[i].abs_diff(timestamps[j]);
        let dik = timestamps[i].abs_diff(timestamps[k]);
        let diff = scores.get(i, j) - scores.get(i, k);
        ok &= match dij.cmp(&dik) {
            core::cmp::Ordering::Less => diff > 1.0 / delta,
            core::cmp::Ordering::Equal => libm::fabs(diff) < delta,
            core::cmp::Ordering::Greater => -diff > 1.0 / delta,
        };
    });
    ok
}

/// Smallest `delta` in `(0, 1)` at which the scores satisfy every ordering
/// condition, or `None` when no such `delta` exists.
///
/// Candidates are the grid `0.01 k` together with the next representable
/// value above each observed tie spread and each reciprocal ordering margin.
/// With no triples (`T = 2`) every `delta` works and `f64::MIN_POSITIVE` is
/// returned.
pub fn measure_delta_on_scores(timestamps: &[u64], scores: &ScoreMatrix) -> Option<f64> {
    let t = timestamps.len();
    if t < 3 {
        return Some(f64::MIN_POSITIVE);
    }
    let mut candidates: Vec<f64> = (1..100).map(|k| k as f64 * 0.01).collect();
    for_each_triple(t, |i, j, k| {
        let diff = scores.get(i, j) - scores.get(i, k);
        if timestamps[i].abs_diff(timestamps[j]) == timestamps[i].abs_diff(timestamps[k]) {
            candidates.push(libm::fabs(diff).next_up());
        } else if diff != 0.0 {
            let margin = libm::fabs(diff);
            let mut c = (1.0 / margin).next_up();
            while 1.0 / c >= margin {
                c = c.next_up();
            }
            candidates.push(c);
        }
    });
    candidates
        .into_iter()
        .filter(|&d| d > 0.0 && d < 1.0 && satisfies_vlo(timestamps, scores, d))
        .fold(None, |best: Option<f64>, d| Some(best.map_or(d, |b| b.min(d))))
}

/// [`measure_delta_on_scores`] on the clip's tempered alignment scores.
pub fn measure_delta(clip: &ClipSequence, temperature: f64) -> Option<f64> {
    let scores = tempered_scores(clip, temperature).ok()?;
    measure_delta_on_scores(clip.timestamps(), &scores)
}
