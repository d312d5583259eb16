use alloc::vec::Vec;

use super::{check_temperature, NegativeSelector, PositiveSelector, ScoreKind, ScoreMatrix, TnceConfig};
use crate::embedding::ClipSequence;
use crate::error::{Error, Result};
use crate::math::log_sum_exp;

/// Ordering loss averaged over all `T(T-1)` ordered frame pairs.
pub fn vlo_loss(clip: &ClipSequence, temperature: f64) -> Result<f64> {
    tnce_loss(clip, &TnceConfig::vlo(temperature))
}

/// Ordering loss on supplied pairwise scores instead of embedding-derived ones.
///
/// `scores.get(i, k)` is the score of frame `k` seen from anchor `i`; the
/// diagonal is never read.
pub fn vlo_loss_on_scores(timestamps: &[u64], scores: &ScoreMatrix, temperature: f64) -> Result<f64> {
    if timestamps.len() < 2 {
        return Err(Error::TooFewFrames { min: 2, found: timestamps.len() });
    }
    if scores.size() != timestamps.len() {
        return Err(Error::LengthMismatch { what: "score matrix", expected: timestamps.len(), found: scores.size() });
    }
    let cfg = TnceConfig::vlo(temperature);
    contrastive_eval(timestamps, scores, &cfg, false).map(|(loss, _)| loss)
}

/// Loss of one member of the time-contrastive InfoNCE family.
///
/// For every anchor and each positive picked by the selector the term is
/// `-log(exp(s+ / t) / sum_neg exp(s- / t))`; the loss is the mean over all
/// (anchor, positive) instances.
pub fn tnce_loss(clip: &ClipSequence, cfg: &TnceConfig) -> Result<f64> {
    cfg.validate()?;
    let scores = score_matrix(&clip.similarities()?, cfg.score);
    contrastive_eval(clip.timestamps(), &scores, cfg, false).map(|(loss, _)| loss)
}

pub(crate) fn score_matrix(sims: &[f64], kind: ScoreKind) -> ScoreMatrix {
    let t = sims.len();
    let mut m = ScoreMatrix::zeros(t);
    for i in 0..t {
        for k in 0..t {
            let v = match kind {
                ScoreKind::DirectSim => sims[k],
                ScoreKind::DifferenceScore => -libm::fabs(sims[i] - sims[k]),
            };
            m.set(i, k, v);
        }
    }
    m
}

fn positives(sel: PositiveSelector, i: usize, t: usize) -> impl Iterator<Item = usize> {
    let (lo, hi) = match sel {
        PositiveSelector::LastFrame if i + 1 < t => (t - 1, t),
        PositiveSelector::LastFrame => (0, 0),
        PositiveSelector::FutureFrame => (i + 1, t),
        PositiveSelector::VloPair => (0, t),
    };
    (lo..hi).filter(move |&j| j != i)
}

/// Shared evaluator. Returns the loss and, when requested, `dL/dS` for the
/// score matrix `S`.
pub(crate) fn contrastive_eval(
    timestamps: &[u64],
    scores: &ScoreMatrix,
    cfg: &TnceConfig,
    want_grad: bool,
) -> Result<(f64, Option<ScoreMatrix>)> {
    check_temperature(cfg.temperature)?;
    let t = timestamps.len();
    let inv_tau = 1.0 / cfg.temperature;
    let mut grad = want_grad.then(|| ScoreMatrix::zeros(t));
    let mut negs: Vec<usize> = Vec::with_capacity(t);
    let mut sum = 0.0;
    let mut count = 0usize;

    for i in 0..t {
        for j in positives(cfg.positive, i, t) {
            let dij = timestamps[i].abs_diff(timestamps[j]);
            negs.clear();
            negs.extend((0..t).filter(|&k| {
                k != i
                    && match cfg.negative {
                        NegativeSelector::OtherFrames => true,
                        NegativeSelector::FartherFrames => timestamps[i].abs_diff(timestamps[k]) >= dij,
                    }
            }));
            if negs.is_empty() {
                return Err(Error::EmptySelection("negative"));
            }
            let row = scores.row(i);
            let lse = log_sum_exp(negs.iter().map(|&k| row[k] * inv_tau));
            sum += lse - row[j] * inv_tau;
            count += 1;
            if let Some(g) = grad.as_mut() {
                for &k in &negs {
                    g.add(i, k, libm::exp(row[k] * inv_tau - lse) * inv_tau);
                }
                g.add(i, j, -inv_tau);
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptySelection("positive"));
    }
    let scale = 1.0 / count as f64;
    if let Some(g) = grad.as_mut() {
        for i in 0..t {
            for k in 0..t {
                g.set(i, k, g.get(i, k) * scale);
            }
        }
    }
    Ok((sum / count as f64, grad))
}
