use actol_core::gradients::{grad_vlo, DEFAULT_FD_STEP};
use actol_core::synthetic::{perturb_language, random_clip};
use actol_core::{
    alignment_score, bb_loss, cosine_sim, lower_bound, normalize, reward_curve, tnce_loss, vlo_loss, BridgeInterval,
    ClipSequence, EmbeddingVector, TnceConfig,
};
use proptest::prelude::*;

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim).prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
}

fn timestamps(max_len: usize) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(1u64..5, 1..max_len).prop_map(|gaps| {
        let mut ts = vec![0];
        for g in gaps {
            ts.push(ts.last().unwrap() + g);
        }
        ts
    })
}

/// Random orthogonal matrix from Gram-Schmidt on seeded Gaussian columns.
fn rotation(dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = actol_core::rng::seeded(seed);
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < dim {
        let mut v = actol_core::rng::gaussian_vec(&mut rng, dim);
        for u in &q {
            let p: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
        if let Ok(n) = normalize(&v) {
            q.push(n.into_inner());
        }
    }
    q
}

fn apply(q: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    q.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn rotate_clip(clip: &ClipSequence, q: &[Vec<f64>]) -> ClipSequence {
    let frames = clip.frames().iter().map(|f| EmbeddingVector::new(apply(q, f.as_slice())).unwrap()).collect();
    let l = EmbeddingVector::new(apply(q, clip.language().as_slice())).unwrap();
    ClipSequence::new(clip.timestamps().to_vec(), frames, l).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn alignment_is_lipschitz(vk in vector(6), vl in vector(6), l in vector(6)) {
        let (vk, vl) = (normalize(&vk).unwrap(), normalize(&vl).unwrap());
        let score = alignment_score(&vk, &vl, &EmbeddingVector::new(l).unwrap()).unwrap().value();
        let dist: f64 = vk.as_slice().iter().zip(vl.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!(score.abs() <= dist + 1e-12);
        prop_assert!((-2.0..=0.0).contains(&score));
    }

    #[test]
    fn alignment_is_symmetric(vi in vector(4), vj in vector(4), l in vector(4)) {
        let (vi, vj, l) = (EmbeddingVector::new(vi).unwrap(), EmbeddingVector::new(vj).unwrap(), EmbeddingVector::new(l).unwrap());
        prop_assert_eq!(alignment_score(&vi, &vj, &l).unwrap(), alignment_score(&vj, &vi, &l).unwrap());
    }

    #[test]
    fn cosine_ignores_scale(v in vector(5), l in vector(5), a in 0.1f64..10.0) {
        let lv = EmbeddingVector::new(l).unwrap();
        let scaled: Vec<f64> = v.iter().map(|x| x * a).collect();
        let c1 = cosine_sim(&EmbeddingVector::new(v).unwrap(), &lv).unwrap();
        let c2 = cosine_sim(&EmbeddingVector::new(scaled).unwrap(), &lv).unwrap();
        prop_assert!((c1 - c2).abs() < 1e-12);
    }

    #[test]
    fn normalize_is_idempotent(v in vector(7)) {
        let once = normalize(&v).unwrap();
        let twice = normalize(once.as_slice()).unwrap();
        prop_assert!(once.as_slice().iter().zip(twice.as_slice()).all(|(a, b)| (a - b).abs() < 1e-15));
        prop_assert!(once.is_unit());
    }

    #[test]
    fn loss_exceeds_bound(ts in timestamps(10), dim in 2usize..8, seed in any::<u64>()) {
        let clip = random_clip(&ts, dim, seed);
        let gap = vlo_loss(&clip, 1.0).unwrap() - lower_bound(&clip);
        if clip.len() >= 3 { prop_assert!(gap > 0.0); } else { prop_assert_eq!(gap, 0.0); }
    }

    #[test]
    fn vlo_pair_family_member_is_the_loss(ts in timestamps(8), seed in any::<u64>(), tau in 0.05f64..2.0) {
        let clip = random_clip(&ts, 3, seed);
        prop_assert_eq!(vlo_loss(&clip, tau).unwrap().to_bits(), tnce_loss(&clip, &TnceConfig::vlo(tau)).unwrap().to_bits());
    }

    #[test]
    fn losses_are_rotation_invariant(ts in timestamps(8), seed in any::<u64>()) {
        let clip = random_clip(&ts, 4, seed);
        let rotated = rotate_clip(&clip, &rotation(4, seed ^ 1));
        prop_assert!((vlo_loss(&clip, 1.0).unwrap() - vlo_loss(&rotated, 1.0).unwrap()).abs() < 1e-12);
        let full = BridgeInterval::full(&clip);
        prop_assert!((bb_loss(&clip, full).unwrap() - bb_loss(&rotated, full).unwrap()).abs() < 1e-12);
        let a = reward_curve(&clip).unwrap();
        let b = reward_curve(&rotated).unwrap();
        prop_assert!(a.raw.iter().zip(&b.raw).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn vlo_gradient_rotates_with_inputs(ts in timestamps(7), seed in any::<u64>()) {
        let clip = random_clip(&ts, 4, seed);
        let q = rotation(4, seed ^ 2);
        let g = grad_vlo(&clip, 1.0).unwrap();
        let gr = grad_vlo(&rotate_clip(&clip, &q), 1.0).unwrap();
        for (a, b) in g.frames.iter().zip(&gr.frames) {
            let ra = apply(&q, a);
            prop_assert!(ra.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-10));
        }
        let rl = apply(&q, &g.language);
        prop_assert!(rl.iter().zip(&gr.language).all(|(x, y)| (x - y).abs() < 1e-10));
    }

    #[test]
    fn bridge_loss_is_time_reversible(ts in timestamps(8), seed in any::<u64>()) {
        let clip = random_clip(&ts, 3, seed);
        let last = *ts.last().unwrap();
        let rev_ts: Vec<u64> = ts.iter().rev().map(|t| last - t).collect();
        let frames: Vec<EmbeddingVector> = clip.frames().iter().rev().cloned().collect();
        let rev = ClipSequence::new(rev_ts, frames, clip.language().clone()).unwrap();
        let a = bb_loss(&clip, BridgeInterval::full(&clip)).unwrap();
        let b = bb_loss(&rev, BridgeInterval::full(&rev)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn perturbation_stays_within_delta(l in vector(5), delta in 0.0f64..2.0, seed in any::<u64>()) {
        let l = normalize(&l).unwrap();
        let p = perturb_language(&l, delta, seed).unwrap();
        let dist: f64 = l.as_slice().iter().zip(p.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!(dist <= delta + 1e-12);
        prop_assert!(p.is_unit());
    }
}

#[test]
fn fd_step_is_small_enough_for_bridge_loss() {
    // the bridge loss is quadratic, so the fourth-order stencil is exact up to rounding
    let clip = random_clip(&[0, 2, 3, 7], 3, 9);
    let err = actol_core::finite_diff_check(
        &actol_core::LossSpec::Bb { interval: BridgeInterval::full(&clip) },
        &clip,
        DEFAULT_FD_STEP,
    )
    .unwrap();
    assert!(err < 1e-8, "{err}");
}
