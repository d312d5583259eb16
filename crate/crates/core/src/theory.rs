//! Numerical witnesses for the ordering lower bound and its tightness, the
//! Lipschitz step behind local continuity, robustness to language
//! perturbations, and the bridge marginals.
//!
//! Every check returns a [`TheoremReport`]. Slack is `rhs - lhs` of the
//! asserted inequality, so a negative worst slack means a violation.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::embedding::{normalize, AlignmentScore, ClipSequence, EmbeddingVector};
use crate::error::{Error, Result};
use crate::math;
use crate::objectives::{
    bridge_mean, bridge_variance, lower_bound, lower_bound_for_timestamps, profile_for, vlo_loss, vlo_loss_on_scores,
    ScoreMatrix,
};
use crate::rng::{substream, unit_vector};
use crate::synthetic::{perturb_language_with, random_clip, sample_bridge_with};
use crate::trainer::{ordering_margins, tempered_scores, train_free, TrainConfig};

/// Absolute slack granted to inequalities that hold with equality in exact
/// arithmetic only in degenerate configurations.
pub const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Measurement {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoremReport {
    pub theorem: String,
    pub instances: usize,
    pub violations: usize,
    /// Smallest observed `rhs - lhs`; `+inf` when nothing was asserted.
    pub worst_slack: f64,
    /// Instances that sit on a boundary and are reported but not asserted.
    pub boundary_cases: usize,
    pub measurements: Vec<Measurement>,
    pub pass: bool,
}

impl TheoremReport {
    fn new(theorem: &str) -> Self {
        Self {
            theorem: theorem.to_string(),
            instances: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
            boundary_cases: 0,
            measurements: Vec::new(),
            pass: true,
        }
    }

    /// Records one asserted instance with the given slack; `strict` demands
    /// slack > 0, otherwise slack >= 0.
    fn record(&mut self, slack: f64, strict: bool) {
        self.instances += 1;
        self.worst_slack = self.worst_slack.min(slack);
        let ok = if strict { slack > 0.0 } else { slack >= 0.0 };
        if !ok || slack.is_nan() {
            self.violations += 1;
        }
    }

    fn measure(&mut self, name: &str, value: f64) {
        self.measurements.push(Measurement { name: name.to_string(), value });
    }

    fn finish(mut self) -> Self {
        self.pass = self.violations == 0;
        self
    }

    /// Folds another report's counts into this one. Measurements are not
    /// merged; callers summarise them as they see fit.
    pub fn absorb(&mut self, other: &TheoremReport) {
        self.instances += other.instances;
        self.violations += other.violations;
        self.boundary_cases += other.boundary_cases;
        self.worst_slack = self.worst_slack.min(other.worst_slack);
        self.pass &= other.pass;
    }

    pub fn with_measurement(mut self, name: &str, value: f64) -> Self {
        self.measure(name, value);
        self
    }

    /// Empty passing report, for callers that build one up with [`absorb`](Self::absorb).
    pub fn empty(theorem: &str) -> Self {
        Self::new(theorem)
    }

    pub fn measurement(&self, name: &str) -> Option<f64> {
        self.measurements.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

/// Asserts `vlo_loss > lower_bound` on every clip with at least three frames.
/// Two-frame clips have loss and bound both zero and are counted as boundary
/// cases.
pub fn check_lower_bound(clips: &[ClipSequence], temperature: f64) -> Result<TheoremReport> {
    if clips.is_empty() {
        return Err(Error::param("clips", "at least one clip is required"));
    }
    let mut report = TheoremReport::new("lower-bound");
    for clip in clips {
        if clip.len() < 3 {
            report.boundary_cases += 1;
            continue;
        }
        let gap = vlo_loss(clip, temperature)? - lower_bound(clip);
        report.record(gap, true);
    }
    report.measure("min_gap", report.worst_slack);
    Ok(report.finish())
}

/// Scores attaining the lower bound to within `eps`.
///
/// Every pair is scored `-gamma * r(d_ij)` where `r` ranks the distinct
/// pairwise distances of the clip, so equal distances share a score and each
/// closer level beats every farther one by at least
/// `gamma = log(T / (min n_im * eps))`.
pub fn construct_near_optimal(timestamps: &[u64], eps: f64) -> Result<ScoreMatrix> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::param("eps", "must be positive and finite"));
    }
    let t = timestamps.len();
    if t < 2 {
        return Err(Error::TooFewFrames { min: 2, found: t });
    }
    let gamma = near_optimal_gap(timestamps, eps);
    let mut levels: Vec<u64> = (0..t)
        .flat_map(|i| (0..t).filter(move |&k| k != i).map(move |k| timestamps[i].abs_diff(timestamps[k])))
        .collect();
    levels.sort_unstable();
    levels.dedup();
    let mut s = ScoreMatrix::zeros(t);
    for i in 0..t {
        for k in (0..t).filter(|&k| k != i) {
            let rank = levels.binary_search(&timestamps[i].abs_diff(timestamps[k])).expect("distance is listed");
            s.set(i, k, -gamma * rank as f64);
        }
    }
    Ok(s)
}

/// `max(0, log(T / (min n_im * eps)))`
pub fn near_optimal_gap(timestamps: &[u64], eps: f64) -> f64 {
    let t = timestamps.len();
    let n_min = (0..t).flat_map(|i| profile_for(timestamps, i).multiplicities).min().unwrap_or(1) as f64;
    libm::log(t as f64 / (n_min * eps)).max(0.0)
}

/// Builds the near-optimal scores for every `eps` and asserts
/// `loss < lower_bound + eps` (temperature 1; the scores are logits).
pub fn check_tightness(timestamps: &[u64], epsilons: &[f64]) -> Result<TheoremReport> {
    let mut report = TheoremReport::new("tightness");
    let lb = lower_bound_for_timestamps(timestamps);
    for &eps in epsilons {
        let scores = construct_near_optimal(timestamps, eps)?;
        let loss = vlo_loss_on_scores(timestamps, &scores, 1.0)?;
        report.record(lb + eps - loss, true);
        report.measure(&format!("excess_at_eps_{eps}"), loss - lb);
    }
    Ok(report.finish())
}

/// `|R(v_k, v_l, l)| <= ‖v_k - v_l‖` for unit vectors, returned as slack.
fn lipschitz_slack(vk: &[f64], vl: &[f64], l: &[f64]) -> Result<f64> {
    let (vk, vl, l) = (normalize(vk)?, normalize(vl)?, normalize(l)?);
    let sk = math::dot(vk.as_slice(), l.as_slice());
    let sl = math::dot(vl.as_slice(), l.as_slice());
    let score = AlignmentScore::from_similarities(sk, sl).value();
    Ok(libm::sqrt(math::dist_sq(vk.as_slice(), vl.as_slice())) - libm::fabs(score) + ROUNDOFF)
}

/// Lipschitz step on random unit triples `(v_k, v_l, l)`.
pub fn check_lipschitz(trials: usize, dim: usize, seed: u64) -> Result<TheoremReport> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let mut report = TheoremReport::new("lipschitz");
    for trial in 0..trials {
        let mut rng = substream(seed, trial as u64);
        let vk = unit_vector(&mut rng, dim);
        let vl = unit_vector(&mut rng, dim);
        let l = unit_vector(&mut rng, dim);
        report.record(lipschitz_slack(vk.as_slice(), vl.as_slice(), l.as_slice())?, false);
    }
    Ok(report.finish())
}

/// Largest `‖v_t - mean(t)‖² / var(t)` over interior frames of the full-clip bridge.
pub fn deviation_ratio(clip: &ClipSequence) -> Result<f64> {
    let ts = clip.timestamps();
    let (a, b) = (ts[0], ts[clip.len() - 1]);
    let mut worst: f64 = 0.0;
    for (p, &t) in ts.iter().enumerate().take(clip.len() - 1).skip(1) {
        let mean = bridge_mean(t, a, b, clip.frame(0), clip.frame(clip.len() - 1))?;
        worst = worst.max(math::dist_sq(clip.frame(p), &mean) / bridge_variance(t, a, b)?);
    }
    Ok(worst)
}

/// Continuity at the level where it holds literally: the Lipschitz step on
/// every listed pair of the clip (directions only, as cosine similarity sees
/// them), plus the measured bridge deviation ratio and the implied
/// `delta(eps)` for `eps = 0.1` with `C = 1`.
pub fn check_continuity(clip: &ClipSequence, pairs: &[(usize, usize)]) -> Result<TheoremReport> {
    let mut report = TheoremReport::new("continuity");
    let l = clip.language().as_slice();
    for &(k, m) in pairs {
        clip.check_index(k)?;
        clip.check_index(m)?;
        report.record(lipschitz_slack(clip.frame(k), clip.frame(m), l)?, false);
    }
    report.measure("deviation_ratio", deviation_ratio(clip)?);
    let span = (clip.timestamps()[clip.len() - 1] - clip.timestamps()[0]) as f64;
    let eps = 0.1;
    report.measure("implied_delta_eps_0.1", (eps * span / 4.0).min(eps * eps / 4.0));
    Ok(report.finish())
}

/// `|R(v_i, v_j, l') - R(v_i, v_j, l)|` for unit vectors.
fn score_shift(vi: &[f64], vj: &[f64], l: &[f64], lp: &[f64]) -> f64 {
    let before = AlignmentScore::from_similarities(math::dot(vi, l), math::dot(vj, l)).value();
    let after = AlignmentScore::from_similarities(math::dot(vi, lp), math::dot(vj, lp)).value();
    libm::fabs(after - before)
}

/// Language moved by chord `delta` in the direction that changes
/// `sim(v_i, l) - sim(v_j, l)` fastest.
pub fn worst_case_language(
    vi: &EmbeddingVector,
    vj: &EmbeddingVector,
    l: &EmbeddingVector,
    delta: f64,
) -> Result<EmbeddingVector> {
    let l = l.normalized()?;
    let mut dir: Vec<f64> =
        vi.normalized()?.as_slice().iter().zip(vj.normalized()?.as_slice()).map(|(a, b)| a - b).collect();
    math::project_tangent(&mut dir, l.as_slice());
    let Ok(dir) = normalize(&dir) else {
        return Ok(l);
    };
    let angle = 2.0 * libm::asin((delta / 2.0).min(1.0));
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    normalize(&l.as_slice().iter().zip(dir.as_slice()).map(|(a, b)| c * a + s * b).collect::<Vec<_>>())
}

fn robustness_into(
    report: &mut TheoremReport,
    vi: &EmbeddingVector,
    vj: &EmbeddingVector,
    l: &EmbeddingVector,
    delta: f64,
    rng: &mut impl Rng,
) -> Result<f64> {
    let (vi, vj, l) = (vi.normalized()?, vj.normalized()?, l.normalized()?);
    let lp = perturb_language_with(&l, delta, rng)?;
    let shift = score_shift(vi.as_slice(), vj.as_slice(), l.as_slice(), lp.as_slice());
    report.record(2.0 * delta - shift + ROUNDOFF, false);
    Ok(if delta > 0.0 { shift / (2.0 * delta) } else { 0.0 })
}

/// Robustness bound `|dR| <= 2 delta` for one frame pair over random
/// perturbations, plus the ratio attained by the worst-case direction.
pub fn check_robustness(
    vi: &EmbeddingVector,
    vj: &EmbeddingVector,
    l: &EmbeddingVector,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<TheoremReport> {
    let mut report = TheoremReport::new("robustness");
    let mut worst_ratio: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = substream(seed, trial as u64);
        worst_ratio = worst_ratio.max(robustness_into(&mut report, vi, vj, l, delta, &mut rng)?);
    }
    report.measure("worst_random_ratio", worst_ratio);
    if delta > 0.0 {
        let lw = worst_case_language(vi, vj, l, delta)?;
        let shift = score_shift(
            &normalize(vi.as_slice())?.into_inner(),
            &normalize(vj.as_slice())?.into_inner(),
            &l.normalized()?.into_inner(),
            lw.as_slice(),
        );
        report.measure("worst_case_direction_ratio", shift / (2.0 * delta));
    }
    Ok(report.finish())
}

/// Robustness over fresh random `(v_i, v_j, l)` triples, one per trial.
pub fn check_robustness_random(dim: usize, delta: f64, trials: usize, seed: u64) -> Result<TheoremReport> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let mut report = TheoremReport::new("robustness");
    let mut worst_ratio: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = substream(seed, trial as u64);
        let vi = unit_vector(&mut rng, dim);
        let vj = unit_vector(&mut rng, dim);
        let l = unit_vector(&mut rng, dim);
        worst_ratio = worst_ratio.max(robustness_into(&mut report, &vi, &vj, &l, delta, &mut rng)?);
    }
    report.measure("worst_random_ratio", worst_ratio);
    Ok(report.finish())
}

/// Outcome of training one random clip toward the bound.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EmergenceOutcome {
    pub seed: u64,
    pub final_gap: f64,
    /// Smallest `R_ij - R_ik` over triples with `d_ij < d_ik`, untempered.
    pub min_order_margin: Option<f64>,
    pub ordered: bool,
}

impl EmergenceOutcome {
    pub fn passes(&self, gap_threshold: f64) -> bool {
        self.final_gap < gap_threshold && self.ordered
    }
}

/// Trains free embeddings from a random clip on `timestamps` and reports the
/// final gap to the bound and whether every strict distance order is
/// reflected in the alignment scores.
pub fn ordering_emergence_run(
    timestamps: &[u64],
    dim: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<EmergenceOutcome> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    if timestamps.len() < 2 || timestamps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("timestamps", "need at least two strictly increasing timestamps"));
    }
    let clip = random_clip(timestamps, dim, seed);
    let history = train_free(&clip, &TrainConfig { seed, ..cfg.clone() })?;
    let last = &history.final_clip;
    let final_gap = vlo_loss(last, cfg.temperature)? - lower_bound(last);
    let margins = ordering_margins(timestamps, &tempered_scores(last, 1.0)?);
    Ok(EmergenceOutcome { seed, final_gap, min_order_margin: margins.min_order_margin, ordered: margins.ordered() })
}

/// Monte Carlo check of the bridge marginals.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BridgeStatsConfig {
    pub dim: usize,
    /// Interval length `n(j) - n(i)`; must be even so the midpoint is a frame time.
    pub length: u64,
    pub samples: usize,
    pub seed: u64,
    /// Allowed relative error of the midpoint variance.
    pub variance_tolerance: f64,
    /// Negates the reference variance; a negative control for harnesses.
    pub flip_variance_sign: bool,
}

impl Default for BridgeStatsConfig {
    fn default() -> Self {
        Self { dim: 3, length: 10, samples: 10_000, seed: 0, variance_tolerance: 0.05, flip_variance_sign: false }
    }
}

/// Endpoints must match the bridge mean exactly, each midpoint coordinate
/// mean must lie within three standard errors, and the midpoint variance
/// (pooled over coordinates) within the relative tolerance.
pub fn check_bridge_statistics(cfg: &BridgeStatsConfig) -> Result<TheoremReport> {
    if cfg.length < 2 || !cfg.length.is_multiple_of(2) {
        return Err(Error::param("length", "must be even and at least 2"));
    }
    if cfg.samples < 2 {
        return Err(Error::param("samples", "at least two samples are required"));
    }
    let mut rng = substream(cfg.seed, 0);
    let v_start = unit_vector(&mut rng, cfg.dim).into_inner();
    let v_end = unit_vector(&mut rng, cfg.dim).into_inner();
    let times = [0, cfg.length / 2, cfg.length];
    let mid_t = times[1];

    let mut report = TheoremReport::new("bridge-statistics");
    let mut sum = alloc::vec![0.0; cfg.dim];
    let mut sum_sq = alloc::vec![0.0; cfg.dim];
    let mut endpoint_error: f64 = 0.0;
    for _ in 0..cfg.samples {
        let pts = sample_bridge_with(&v_start, &v_end, &times, &mut rng)?;
        endpoint_error = endpoint_error
            .max(libm::sqrt(math::dist_sq(&pts[0], &v_start)))
            .max(libm::sqrt(math::dist_sq(&pts[2], &v_end)));
        for c in 0..cfg.dim {
            sum[c] += pts[1][c];
            sum_sq[c] += pts[1][c] * pts[1][c];
        }
    }
    // endpoints are pinned exactly
    report.record(-endpoint_error, false);

    let n = cfg.samples as f64;
    let sign = if cfg.flip_variance_sign { -1.0 } else { 1.0 };
    let expected_var = sign * bridge_variance(mid_t, 0, cfg.length)?;
    let expected_mean = bridge_mean(mid_t, 0, cfg.length, &v_start, &v_end)?;
    let true_sd = libm::sqrt(bridge_variance(mid_t, 0, cfg.length)?);
    let mut pooled_var = 0.0;
    let mut worst_z: f64 = 0.0;
    for c in 0..cfg.dim {
        let mean = sum[c] / n;
        let var = (sum_sq[c] - n * mean * mean) / (n - 1.0);
        pooled_var += var / cfg.dim as f64;
        let se = true_sd / libm::sqrt(n);
        let z = libm::fabs(mean - expected_mean[c]) / se;
        worst_z = worst_z.max(z);
        report.record(3.0 - z, false);
    }
    let rel = libm::fabs(pooled_var - expected_var) / libm::fabs(expected_var);
    report.record(cfg.variance_tolerance - rel, false);
    report.measure("midpoint_variance", pooled_var);
    report.measure("expected_variance", expected_var);
    report.measure("variance_relative_error", rel);
    report.measure("worst_mean_z", worst_z);
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identical_embedding_gap_is_closed_form() {
        let v = normalize(&[1.0, 0.0]).unwrap();
        let c = ClipSequence::new(vec![0, 1, 2], vec![v.clone(); 3], normalize(&[0.0, 1.0]).unwrap()).unwrap();
        let r = check_lower_bound(&[c], 1.0).unwrap();
        let ln2 = core::f64::consts::LN_2;
        assert!((r.worst_slack - (4.0 * ln2 / 6.0 - 2.0 * ln2 / 6.0)).abs() < 1e-15);
        assert!(r.pass);
    }

    #[test]
    fn two_frame_clip_is_boundary() {
        let r = check_lower_bound(&[random_clip(&[0, 1], 3, 1), random_clip(&[0, 1, 2], 3, 1)], 1.0).unwrap();
        assert_eq!((r.instances, r.boundary_cases), (1, 1));
        assert!(check_lower_bound(&[], 1.0).is_err());
    }

    #[test]
    fn tightness_examples() {
        let r = check_tightness(&[0, 1, 2, 3], &[1.0, 0.1, 0.01]).unwrap();
        assert!(r.pass, "{r:?}");
        let s = construct_near_optimal(&[0, 1], 0.5).unwrap();
        assert_eq!(vlo_loss_on_scores(&[0, 1], &s, 1.0).unwrap(), 0.0);
        assert!(construct_near_optimal(&[0, 1, 2], 0.0).is_err());
    }

    #[test]
    fn construction_shares_scores_at_equal_distance() {
        let ts = [0, 1, 2, 3];
        let s = construct_near_optimal(&ts, 0.01).unwrap();
        // anchor 1 sees frames 0 and 2 at distance 1
        assert_eq!(s.get(1, 0), s.get(1, 2));
        let gamma = near_optimal_gap(&ts, 0.01);
        assert!((gamma - libm::log(4.0 / 0.01)).abs() < 1e-12);
        assert!(s.get(0, 1) - s.get(0, 2) >= gamma - 1e-12);
    }

    #[test]
    fn construction_satisfies_vlo() {
        let ts = [0, 1, 2, 3];
        let s = construct_near_optimal(&ts, 0.01).unwrap();
        let d = crate::trainer::measure_delta_on_scores(&ts, &s).unwrap();
        assert!(d < 1.0);
    }

    #[test]
    fn lipschitz_and_identical_pair() {
        assert!(check_lipschitz(500, 4, 3).unwrap().pass);
        let c = random_clip(&[0, 1, 2, 3], 4, 2);
        let r = check_continuity(&c, &[(1, 1), (0, 3), (2, 1)]).unwrap();
        assert!(r.pass);
        assert!(r.measurement("deviation_ratio").unwrap().is_finite());
    }

    #[test]
    fn robustness_examples() {
        let mut rng = crate::rng::seeded(4);
        let vi = unit_vector(&mut rng, 5);
        let vj = unit_vector(&mut rng, 5);
        let l = unit_vector(&mut rng, 5);
        let r = check_robustness(&vi, &vj, &l, 0.0, 10, 1).unwrap();
        assert_eq!(r.worst_slack, ROUNDOFF);
        let r = check_robustness(&vi, &vj, &l, 0.1, 1000, 1).unwrap();
        assert!(r.pass);
        let w = r.measurement("worst_case_direction_ratio").unwrap();
        assert!(w > 0.0 && w <= 1.0, "{w}");
    }

    #[test]
    fn emergence_on_three_frames() {
        let cfg =
            TrainConfig { learning_rate: 0.01, steps: 2000, lambda: 0.0, temperature: 0.01, ..TrainConfig::default() };
        let out = ordering_emergence_run(&[0, 1, 3], 4, &cfg, 5).unwrap();
        assert!(out.passes(0.05), "{out:?}");
        assert!(ordering_emergence_run(&[0, 0, 3], 4, &cfg, 5).is_err());
    }

    #[test]
    fn absorb_counts() {
        let mut a = check_lipschitz(10, 3, 0).unwrap();
        let b = check_lipschitz(5, 3, 1).unwrap();
        a.absorb(&b);
        assert_eq!(a.instances, 15);
        assert!(a.pass);
    }

    #[test]
    fn bridge_statistics_and_negative_control() {
        let cfg = BridgeStatsConfig { samples: 4000, ..BridgeStatsConfig::default() };
        let r = check_bridge_statistics(&cfg).unwrap();
        assert!(r.pass, "{r:?}");
        let flipped = check_bridge_statistics(&BridgeStatsConfig { flip_variance_sign: true, ..cfg }).unwrap();
        assert!(!flipped.pass);
    }
}
