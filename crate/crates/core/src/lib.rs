//! Temporal-coherence objectives for vision-language embedding sequences.
//!
//! A clip is an ordered list of frame embeddings with integer timestamps and a
//! single language embedding. The crate provides
//!
//! - the ordering contrastive loss over frame pairs, whose negatives are the
//!   frames at least as far from the anchor as the positive ([`objectives`]),
//! - a Brownian-bridge regulariser that keeps intermediate frames close to the
//!   linear interpolation between interval endpoints,
//! - the combinatorial lower bound of the ordering loss and the score-space
//!   construction that attains it,
//! - hand-derived gradients with a finite-difference oracle ([`gradients`]),
//! - a projected gradient-descent trainer on the unit sphere ([`trainer`]),
//! - synthetic clip generators with known ground truth ([`synthetic`]),
//! - numerical witnesses for the ordering, continuity and robustness
//!   guarantees ([`theory`]), and reward-curve extraction ([`reward`]).
//!
//! The crate is `no_std` and only needs `alloc`. All floating-point maths goes
//! through `libm`, and all randomness through seeded ChaCha8 streams, so
//! results are bit-reproducible across platforms.
#![no_std]

extern crate alloc;

pub mod embedding;
pub mod error;
pub mod gradients;
pub mod objectives;
pub mod reward;
pub mod rng;
pub mod synthetic;
pub mod theory;
pub mod trainer;

mod math;

pub use embedding::{alignment_score, cosine_sim, normalize, AlignmentScore, ClipSequence, EmbeddingVector};
pub use error::{Error, Result};
pub use gradients::{finite_diff_check, grad_bb, grad_tnce, grad_total, grad_vlo, GradientSet, LossSpec};
pub use objectives::{
    actol_loss, bb_loss, bb_mean, bb_variance, distance_profile, lower_bound, negative_set, tnce_loss, vlo_loss,
    vlo_loss_on_scores, BridgeInterval, DistanceProfile, LossBreakdown, NegativeSelector, PositiveSelector, ScoreKind,
    ScoreMatrix, TnceConfig,
};
pub use reward::{
    compare_objectives, median, reward_curve, ComparisonRecord, NamedObjective, ObjectiveOutcome, RewardCurve,
};
pub use synthetic::{
    generate_clip, perturb_language, random_shaped_clip, sample_bridge, GroundTruth, SyntheticClipSpec, TailMode,
};
pub use theory::{
    check_bridge_statistics, check_continuity, check_lipschitz, check_lower_bound, check_robustness,
    check_robustness_random, check_tightness, construct_near_optimal, ordering_emergence_run, BridgeStatsConfig,
    EmergenceOutcome, Measurement, TheoremReport,
};
pub use trainer::{measure_delta, train_encoder, train_free, LinearEncoder, Objective, TrainConfig, TrainHistory};

/// Default weight of the bridge term in the combined objective.
pub const DEFAULT_BRIDGE_WEIGHT: f64 = 0.1;

/// Default number of frames sampled per clip.
pub const DEFAULT_FRAMES_PER_CLIP: usize = 10;
