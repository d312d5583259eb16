//! Hand-derived gradients of every objective, plus a central-difference oracle.
//!
//! Gradients are taken in the ambient space with respect to the raw frame
//! and language vectors. Cosine similarity normalises internally, so the
//! normalisation Jacobian is part of the chain rule and vectors need not be
//! unit-norm at the evaluation point.

use alloc::vec;
use alloc::vec::Vec;

use crate::embedding::ClipSequence;
use crate::error::{Error, Result};
use crate::math;
use crate::objectives::{
    actol_loss, bb_loss, bridge_mean, bridge_variance, contrastive_eval, score_matrix, tnce_loss, BridgeInterval,
    ScoreKind, ScoreMatrix, TnceConfig,
};

/// Pairs whose similarities differ by less than this sit on the kink of the
/// absolute value and receive subgradient zero.
pub const KINK_TOLERANCE: f64 = 1e-12;

/// Finite-difference step used by the gradient checks.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Smallest `|sim(v_i, l) - sim(v_j, l)|` over frame pairs. Finite
/// differences straddle a kink of the alignment score once a probe moves a
/// similarity by more than this.
pub fn min_similarity_gap(clip: &ClipSequence) -> Result<f64> {
    let s = clip.similarities()?;
    let mut gap = f64::INFINITY;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            gap = gap.min(libm::fabs(s[i] - s[j]));
        }
    }
    Ok(gap)
}

/// Gradient with respect to every frame embedding and the language embedding.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GradientSet {
    pub frames: Vec<Vec<f64>>,
    pub language: Vec<f64>,
    /// Set when some contributing pair was evaluated at the kink.
    pub at_kink: bool,
}

impl GradientSet {
    pub fn zeros(frames: usize, dim: usize) -> Self {
        Self { frames: vec![vec![0.0; dim]; frames], language: vec![0.0; dim], at_kink: false }
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &GradientSet) {
        for (a, b) in self.frames.iter_mut().zip(&other.frames) {
            math::axpy(alpha, b, a);
        }
        math::axpy(alpha, &other.language, &mut self.language);
        self.at_kink |= other.at_kink;
    }

    pub fn is_finite(&self) -> bool {
        self.frames.iter().flatten().chain(&self.language).all(|x| x.is_finite())
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &GradientSet) -> f64 {
        self.flatten().iter().zip(other.flatten()).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max)
    }

    /// Frames row-major, then the language vector.
    pub fn flatten(&self) -> Vec<f64> {
        self.frames.iter().flatten().chain(&self.language).copied().collect()
    }
}

/// A differentiable objective together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    Vlo { temperature: f64 },
    Bb { interval: BridgeInterval },
    Actol { lambda: f64, temperature: f64, intervals: Vec<BridgeInterval> },
    Tnce(TnceConfig),
}

impl LossSpec {
    pub fn value(&self, clip: &ClipSequence) -> Result<f64> {
        match self {
            LossSpec::Vlo { temperature } => crate::objectives::vlo_loss(clip, *temperature),
            LossSpec::Bb { interval } => bb_loss(clip, *interval),
            LossSpec::Actol { lambda, temperature, intervals } => {
                actol_loss(clip, *lambda, *temperature, intervals).map(|b| b.total)
            }
            LossSpec::Tnce(cfg) => tnce_loss(clip, cfg),
        }
    }

    pub fn gradient(&self, clip: &ClipSequence) -> Result<GradientSet> {
        match self {
            LossSpec::Vlo { temperature } => grad_vlo(clip, *temperature),
            LossSpec::Bb { interval } => grad_bb(clip, *interval),
            LossSpec::Actol { lambda, temperature, intervals } => grad_total(clip, *lambda, *temperature, intervals),
            LossSpec::Tnce(cfg) => grad_tnce(clip, cfg),
        }
    }
}

pub fn grad_vlo(clip: &ClipSequence, temperature: f64) -> Result<GradientSet> {
    grad_tnce(clip, &TnceConfig::vlo(temperature))
}

pub fn grad_tnce(clip: &ClipSequence, cfg: &TnceConfig) -> Result<GradientSet> {
    cfg.validate()?;
    let sims = clip.similarities()?;
    let scores = score_matrix(&sims, cfg.score);
    let (_, g) = contrastive_eval(clip.timestamps(), &scores, cfg, true)?;
    let g = g.expect("gradient requested");
    Ok(backprop_scores(clip, &sims, &g, cfg.score))
}

/// Chains `dL/dS` through the score definition and the cosine similarities.
fn backprop_scores(clip: &ClipSequence, sims: &[f64], g: &ScoreMatrix, kind: ScoreKind) -> GradientSet {
    let t = clip.len();
    let mut d_sim = vec![0.0; t];
    let mut at_kink = false;
    for i in 0..t {
        for k in 0..t {
            let gik = g.get(i, k);
            if i == k || gik == 0.0 {
                continue;
            }
            match kind {
                ScoreKind::DirectSim => d_sim[k] += gik,
                ScoreKind::DifferenceScore => {
                    let diff = sims[i] - sims[k];
                    if libm::fabs(diff) < KINK_TOLERANCE {
                        at_kink = true;
                        continue;
                    }
                    let sign = if diff > 0.0 { 1.0 } else { -1.0 };
                    d_sim[i] -= sign * gik;
                    d_sim[k] += sign * gik;
                }
            }
        }
    }

    let l = clip.language().as_slice();
    let nl = math::norm(l);
    let mut out = GradientSet::zeros(t, clip.dim());
    out.at_kink = at_kink;
    for (p, &ds) in d_sim.iter().enumerate() {
        if ds == 0.0 {
            continue;
        }
        let v = clip.frame(p);
        let nv = math::norm(v);
        let s = sims[p];
        // d cos(v, l) / dv = l / (|v||l|) - cos * v / |v|^2
        math::axpy(ds / (nv * nl), l, &mut out.frames[p]);
        math::axpy(-ds * s / (nv * nv), v, &mut out.frames[p]);
        math::axpy(ds / (nv * nl), v, &mut out.language);
        math::axpy(-ds * s / (nl * nl), l, &mut out.language);
    }
    out
}

/// Gradient of the bridge loss. The endpoint frames receive gradient through
/// the bridge mean even though they carry no deviation term of their own.
pub fn grad_bb(clip: &ClipSequence, interval: BridgeInterval) -> Result<GradientSet> {
    BridgeInterval::new(interval.start, interval.end, clip.len())?;
    let mut out = GradientSet::zeros(clip.len(), clip.dim());
    let interior = interval.interior();
    if interior.is_empty() {
        return Ok(out);
    }
    let ts = clip.timestamps();
    let (a, b) = (ts[interval.start], ts[interval.end]);
    let count = interior.len() as f64;
    for p in interior {
        let t = ts[p];
        let alpha = (t - a) as f64 / (b - a) as f64;
        let mean = bridge_mean(t, a, b, clip.frame(interval.start), clip.frame(interval.end))?;
        let c = 1.0 / (bridge_variance(t, a, b)? * count);
        let resid: Vec<f64> = clip.frame(p).iter().zip(&mean).map(|(v, m)| v - m).collect();
        math::axpy(c, &resid, &mut out.frames[p]);
        math::axpy(-(1.0 - alpha) * c, &resid, &mut out.frames[interval.start]);
        math::axpy(-alpha * c, &resid, &mut out.frames[interval.end]);
    }
    Ok(out)
}

/// `grad_vlo + lambda * mean(grad_bb over intervals)`
pub fn grad_total(
    clip: &ClipSequence,
    lambda: f64,
    temperature: f64,
    intervals: &[BridgeInterval],
) -> Result<GradientSet> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::param("lambda", "must be finite and non-negative"));
    }
    if intervals.is_empty() {
        return Err(Error::param("intervals", "at least one bridge interval is required"));
    }
    let mut out = grad_vlo(clip, temperature)?;
    let w = lambda / intervals.len() as f64;
    for iv in intervals {
        out.add_scaled(w, &grad_bb(clip, *iv)?);
    }
    Ok(out)
}

/// `|a - n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    libm::fabs(analytic - numeric) / libm::fabs(analytic).max(libm::fabs(numeric)).max(1e-8)
}

/// Fourth-order central-difference gradient of `f` at `x`:
/// `(-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h` per coordinate.
pub fn numeric_gradient<F>(mut f: F, x: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::param("step", "must be positive and finite"));
    }
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for c in 0..x.len() {
        let mut at = |offset: f64| {
            probe[c] = x[c] + offset;
            let v = f(&probe);
            probe[c] = x[c];
            match v {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(Error::NonFiniteValue),
                Err(e) => Err(e),
            }
        };
        let (up2, up, down, down2) = (at(2.0 * step)?, at(step)?, at(-step)?, at(-2.0 * step)?);
        out.push((8.0 * (up - down) - (up2 - down2)) / (12.0 * step));
    }
    Ok(out)
}

/// Maximum relative error between `analytic` and central differences of `f`.
pub fn max_relative_error<F>(f: F, x: &[f64], analytic: &[f64], step: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if analytic.len() != x.len() {
        return Err(Error::LengthMismatch { what: "analytic gradient", expected: x.len(), found: analytic.len() });
    }
    let numeric = numeric_gradient(f, x, step)?;
    Ok(analytic.iter().zip(&numeric).map(|(&a, &n)| relative_error(a, n)).fold(0.0, f64::max))
}

/// Flattened frame coordinates followed by the language coordinates.
pub fn clip_parameters(clip: &ClipSequence) -> Vec<f64> {
    clip.frames()
        .iter()
        .flat_map(|f| f.as_slice().iter().copied())
        .chain(clip.language().as_slice().iter().copied())
        .collect()
}

/// Writes flattened parameters (see [`clip_parameters`]) back into a clip.
pub fn set_clip_parameters(clip: &mut ClipSequence, params: &[f64]) {
    let d = clip.dim();
    for i in 0..clip.len() {
        clip.frame_mut(i).copy_from_slice(&params[i * d..(i + 1) * d]);
    }
    let off = clip.len() * d;
    clip.language_mut().copy_from_slice(&params[off..off + d]);
}

/// Central-difference check of `loss` on every coordinate of every frame and
/// of the language embedding. Returns the maximum relative error.
pub fn finite_diff_check(loss: &LossSpec, clip: &ClipSequence, step: f64) -> Result<f64> {
    let analytic = loss.gradient(clip)?.flatten();
    let x = clip_parameters(clip);
    let mut work = clip.clone();
    max_relative_error(
        |p| {
            set_clip_parameters(&mut work, p);
            loss.value(&work)
        },
        &x,
        &analytic,
        step,
    )
}
