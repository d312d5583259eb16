//! Library results against brute-force reimplementations written straight
//! from the definitions, and against closed forms.

use std::collections::HashMap;
use std::f64::consts::LN_2;

use actol_core::objectives::{bridge_mean, bridge_variance};
use actol_core::rng::{derive_seed, seeded, unit_vector};
use actol_core::synthetic::{random_clip, sample_bridge, sample_bridge_clip};
use actol_core::theory::construct_near_optimal;
use actol_core::{
    bb_loss, lower_bound, random_shaped_clip, tnce_loss, vlo_loss, vlo_loss_on_scores, BridgeInterval, ClipSequence,
    TnceConfig,
};

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Ordering loss with explicit loops and a naive softmax.
fn vlo_oracle(clip: &ClipSequence, tau: f64) -> f64 {
    let t = clip.len();
    let s: Vec<f64> = clip.frames().iter().map(|v| cos(v.as_slice(), clip.language().as_slice())).collect();
    let ts = clip.timestamps();
    let score = |i: usize, k: usize| -(s[i] - s[k]).abs() / tau;
    let mut total = 0.0;
    for i in 0..t {
        for j in 0..t {
            if i == j {
                continue;
            }
            let dij = ts[i].abs_diff(ts[j]);
            let denom: f64 =
                (0..t).filter(|&k| k != i && ts[i].abs_diff(ts[k]) >= dij).map(|k| score(i, k).exp()).sum();
            total += -(score(i, j).exp() / denom).ln();
        }
    }
    total / (t * (t - 1)) as f64
}

/// Lower bound from a hash-map histogram of distances per anchor.
fn bound_oracle(ts: &[u64]) -> f64 {
    let t = ts.len();
    let mut total = 0.0;
    for i in 0..t {
        let mut counts: HashMap<u64, usize> = HashMap::new();
        for k in (0..t).filter(|&k| k != i) {
            *counts.entry(ts[i].abs_diff(ts[k])).or_default() += 1;
        }
        total += counts.values().map(|&n| n as f64 * (n as f64).ln()).sum::<f64>();
    }
    total / (t * (t - 1)) as f64
}

#[test]
fn vlo_matches_brute_force() {
    for k in 0..200 {
        let clip = random_shaped_clip(2..=9, 2..=8, 3, derive_seed(11, k)).unwrap();
        for tau in [1.0, 0.3] {
            let got = vlo_loss(&clip, tau).unwrap();
            let want = vlo_oracle(&clip, tau);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "clip {k}: {got} vs {want}");
        }
    }
}

#[test]
fn bound_matches_histogram() {
    for k in 0..200 {
        let clip = random_shaped_clip(2..=12, 2..=3, 4, derive_seed(12, k)).unwrap();
        let got = lower_bound(&clip);
        let want = bound_oracle(clip.timestamps());
        assert!((got - want).abs() <= 1e-14, "{got} vs {want}");
    }
}

#[test]
fn bound_closed_forms() {
    let flat = |ts: Vec<u64>| {
        let v = actol_core::normalize(&[1.0, 0.0]).unwrap();
        ClipSequence::new(ts.clone(), vec![v; ts.len()], actol_core::normalize(&[0.0, 1.0]).unwrap()).unwrap()
    };
    assert!((lower_bound(&flat(vec![0, 1, 2])) - 2.0 * LN_2 / 6.0).abs() < 1e-15);
    assert!((lower_bound(&flat(vec![0, 1, 2, 3])) - LN_2 / 3.0).abs() < 1e-15);
    assert_eq!(lower_bound(&flat(vec![0, 1, 6, 10, 23, 26, 34, 41, 53, 55])), 0.0);
    assert!((vlo_loss(&flat(vec![0, 1, 2]), 1.0).unwrap() - 4.0 * LN_2 / 6.0).abs() < 1e-15);
}

#[test]
fn flat_scores_equal_flat_embeddings() {
    let s = actol_core::ScoreMatrix::zeros(3);
    assert!((vlo_loss_on_scores(&[0, 1, 2], &s, 1.0).unwrap() - 4.0 * LN_2 / 6.0).abs() < 1e-15);
}

#[test]
fn lower_bound_holds_including_two_frames() {
    for k in 0..1000 {
        let clip = random_shaped_clip(2..=12, 2..=16, 3, derive_seed(13, k)).unwrap();
        let gap = vlo_loss(&clip, 1.0).unwrap() - lower_bound(&clip);
        if clip.len() == 2 {
            assert_eq!(gap, 0.0);
        } else {
            assert!(gap > 0.0, "clip {k}: gap {gap}");
        }
    }
}

#[test]
fn near_optimal_construction_on_other_timestamps() {
    for ts in [vec![0u64, 1, 2, 3], vec![0, 2, 3, 7, 8], vec![0, 1, 2, 3, 4, 5, 6]] {
        let lb = bound_oracle(&ts);
        for eps in [1.0, 0.1, 0.01, 0.001] {
            let s = construct_near_optimal(&ts, eps).unwrap();
            let loss = vlo_loss_on_scores(&ts, &s, 1.0).unwrap();
            assert!(loss < lb + eps && loss >= lb, "{ts:?} eps {eps}: {loss} vs {lb}");
        }
    }
}

#[test]
fn last_frame_flat_is_log_of_candidates() {
    // every non-final anchor sees the last frame among its T-1 other frames
    let v = actol_core::normalize(&[1.0, 1.0, 0.0]).unwrap();
    let l = actol_core::normalize(&[0.0, 0.0, 1.0]).unwrap();
    for t in 3..8 {
        let clip = ClipSequence::new((0..t as u64).collect(), vec![v.clone(); t], l.clone()).unwrap();
        let got = tnce_loss(&clip, &TnceConfig::last_frame(1.0)).unwrap();
        assert!((got - ((t - 1) as f64).ln()).abs() < 1e-14);
    }
}

#[test]
fn bridge_midpoint_moments() {
    let mut rng = seeded(21);
    let a = unit_vector(&mut rng, 4).into_inner();
    let b = unit_vector(&mut rng, 4).into_inner();
    let n = 10_000;
    let times = [0u64, 4, 8];
    let mut sum = [0.0; 4];
    let mut sum_sq = 0.0;
    for s in 0..n {
        let draw = sample_bridge(&a, &b, &times, derive_seed(22, s)).unwrap();
        assert_eq!(draw[0], a);
        assert_eq!(draw[2], b);
        for c in 0..4 {
            sum[c] += draw[1][c];
        }
        let mid = bridge_mean(4, 0, 8, &a, &b).unwrap();
        sum_sq += draw[1].iter().zip(&mid).map(|(x, m)| (x - m) * (x - m)).sum::<f64>();
    }
    let var = sum_sq / (4.0 * n as f64);
    assert!((var - 2.0).abs() / 2.0 < 0.05, "{var}");
    for c in 0..4 {
        let se = (2.0 / n as f64).sqrt();
        assert!((sum[c] / n as f64 - (a[c] + b[c]) / 2.0).abs() < 3.0 * se);
    }
    assert_eq!(bridge_variance(4, 0, 8).unwrap(), 2.0);
}

#[test]
fn bridge_loss_of_bridge_draws_averages_half_dimension() {
    // each interior frame contributes a chi-square with d degrees of freedom over 2
    let d = 5;
    let times: Vec<u64> = (0..7).collect();
    let mut rng = seeded(31);
    let a = unit_vector(&mut rng, d).into_inner();
    let b = unit_vector(&mut rng, d).into_inner();
    let n = 4000;
    let mut mean = 0.0;
    for s in 0..n {
        let clip = sample_bridge_clip(&a, &b, &times, unit_vector(&mut rng, d), derive_seed(32, s)).unwrap();
        mean += bb_loss(&clip, BridgeInterval::full(&clip)).unwrap() / n as f64;
    }
    assert!((mean - d as f64 / 2.0).abs() / (d as f64 / 2.0) < 0.1, "{mean}");
}

#[test]
fn interpolant_has_zero_bridge_loss() {
    let clip = random_clip(&[0, 10], 3, 4);
    let (a, b) = (clip.frame(0).to_vec(), clip.frame(1).to_vec());
    let times = [0u64, 3, 5, 10];
    let frames = times
        .iter()
        .map(|&t| actol_core::EmbeddingVector::new(bridge_mean(t, 0, 10, &a, &b).unwrap()).unwrap())
        .collect();
    let on_line = ClipSequence::new(times.to_vec(), frames, clip.language().clone()).unwrap();
    assert_eq!(bb_loss(&on_line, BridgeInterval::full(&on_line)).unwrap(), 0.0);
}
