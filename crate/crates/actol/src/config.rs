//! TOML experiment configs, one shape per subcommand.
//!
//! Every config has an optional top-level `seed` (default 0, overridden by
//! `--seed`) that drives all randomness of the run, and an optional `out_dir`
//! (overridden by `--out`). Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use actol_core::gradients::DEFAULT_FD_STEP;
use actol_core::trainer::Objective;
use actol_core::{NamedObjective, SyntheticClipSpec, TailMode, TnceConfig, TrainConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_OUT_DIR: &str = "actol-out";

/// Where a training run gets its initial clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClipSource {
    Synthetic(SyntheticParams),
    /// Independent uniform unit frames at the given timestamps.
    Random {
        timestamps: Vec<u64>,
        dim: usize,
    },
    /// A clip JSON file; relative paths resolve against the config's directory.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticParams {
    pub frames: usize,
    pub dim: usize,
    /// 1-based; defaults to the last frame.
    #[serde(default)]
    pub completion_index: Option<usize>,
    #[serde(default = "default_tail")]
    pub tail_mode: TailMode,
    #[serde(default)]
    pub noise_sigma: f64,
}

fn default_tail() -> TailMode {
    TailMode::None
}

impl SyntheticParams {
    pub fn spec(&self, seed: u64) -> SyntheticClipSpec {
        SyntheticClipSpec {
            frames: self.frames,
            dim: self.dim,
            completion_index: self.completion_index.unwrap_or(self.frames),
            tail_mode: self.tail_mode,
            noise_sigma: self.noise_sigma,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    /// Ordering loss plus the weighted bridge term.
    Actol,
    /// Ordering loss alone.
    Vlo,
    LastFrame,
    FutureFrame,
}

impl ObjectiveName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Actol => "actol",
            Self::Vlo => "vlo",
            Self::LastFrame => "last_frame",
            Self::FutureFrame => "future_frame",
        }
    }

    pub fn objective(self, temperature: f64) -> Objective {
        match self {
            Self::Actol => Objective::Actol,
            Self::Vlo => Objective::Tnce(TnceConfig::vlo(temperature)),
            Self::LastFrame => Objective::Tnce(TnceConfig::last_frame(temperature)),
            Self::FutureFrame => Objective::Tnce(TnceConfig::future_frame(temperature)),
        }
    }

    pub fn named(self, temperature: f64) -> NamedObjective {
        NamedObjective { name: self.as_str().to_string(), objective: self.objective(temperature) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainExperiment {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_objective")]
    pub objective: ObjectiveName,
    pub clip: ClipSource,
    pub train: TrainConfig,
}

fn default_objective() -> ObjectiveName {
    ObjectiveName::Actol
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardExperiment {
    /// Seed of the first clip; clip `k` uses `seed + k`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_seed_count")]
    pub seeds: u64,
    #[serde(default = "default_objectives")]
    pub objectives: Vec<ObjectiveName>,
    pub clip: SyntheticParams,
    pub train: TrainConfig,
}

fn default_seed_count() -> u64 {
    20
}

fn default_objectives() -> Vec<ObjectiveName> {
    vec![ObjectiveName::Actol, ObjectiveName::LastFrame]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    LowerBound,
    Tightness,
    Lipschitz,
    Continuity,
    Robustness,
    BridgeStatistics,
    /// Trains free embeddings to the bound; slow, so not in the default list.
    OrderingEmergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyExperiment {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckName>,
    #[serde(default)]
    pub lower_bound: LowerBoundParams,
    #[serde(default)]
    pub tightness: TightnessParams,
    #[serde(default)]
    pub lipschitz: LipschitzParams,
    #[serde(default)]
    pub continuity: ContinuityParams,
    #[serde(default)]
    pub robustness: RobustnessParams,
    #[serde(default)]
    pub bridge_statistics: BridgeParams,
    #[serde(default)]
    pub ordering_emergence: OrderingParams,
    #[serde(default)]
    pub debug: DebugFlags,
}

fn default_checks() -> Vec<CheckName> {
    vec![
        CheckName::LowerBound,
        CheckName::Tightness,
        CheckName::Lipschitz,
        CheckName::Continuity,
        CheckName::Robustness,
        CheckName::BridgeStatistics,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowerBoundParams {
    pub clips: u64,
    pub min_frames: usize,
    pub max_frames: usize,
    pub min_dim: usize,
    pub max_dim: usize,
    pub max_gap: u64,
    pub temperature: f64,
}

impl Default for LowerBoundParams {
    fn default() -> Self {
        Self { clips: 1000, min_frames: 3, max_frames: 12, min_dim: 2, max_dim: 16, max_gap: 3, temperature: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TightnessParams {
    pub timestamps: Vec<u64>,
    pub epsilons: Vec<f64>,
}

impl Default for TightnessParams {
    fn default() -> Self {
        Self { timestamps: vec![0, 1, 2, 3], epsilons: vec![1.0, 0.1, 0.01] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LipschitzParams {
    pub trials: usize,
    pub dim: usize,
}

impl Default for LipschitzParams {
    fn default() -> Self {
        Self { trials: 10_000, dim: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuityParams {
    /// Clips drawn from the bridge between two random unit endpoints.
    pub clips: u64,
    pub frames: usize,
    pub dim: usize,
}

impl Default for ContinuityParams {
    fn default() -> Self {
        Self { clips: 100, frames: 10, dim: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessParams {
    pub trials: usize,
    pub dim: usize,
    pub deltas: Vec<f64>,
}

impl Default for RobustnessParams {
    fn default() -> Self {
        Self { trials: 10_000, dim: 8, deltas: vec![0.01, 0.1, 0.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BridgeParams {
    pub dim: usize,
    pub length: u64,
    pub samples: usize,
    pub variance_tolerance: f64,
}

impl Default for BridgeParams {
    fn default() -> Self {
        Self { dim: 3, length: 10, samples: 10_000, variance_tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrderingParams {
    pub seeds: u64,
    /// Minimum number of seeds that must reach the gap with every triple ordered.
    pub required: u64,
    pub timestamps: Vec<u64>,
    pub dim: usize,
    pub gap_threshold: f64,
    pub train: TrainConfig,
}

impl Default for OrderingParams {
    fn default() -> Self {
        Self {
            seeds: 10,
            required: 9,
            timestamps: vec![0, 1, 6, 10, 23, 26, 34, 41, 53, 55],
            dim: 8,
            gap_threshold: 0.05,
            train: TrainConfig {
                learning_rate: 0.01,
                steps: 5000,
                lambda: 0.0,
                temperature: 0.01,
                ..TrainConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DebugFlags {
    /// Negates the reference bridge variance; the bridge check must then fail.
    pub flip_variance_sign: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossName {
    Vlo,
    Bb,
    Actol,
    LastFrame,
    FutureFrame,
}

impl LossName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Vlo => "vlo",
            Self::Bb => "bb",
            Self::Actol => "actol",
            Self::LastFrame => "last_frame",
            Self::FutureFrame => "future_frame",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradcheckExperiment {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_losses")]
    pub losses: Vec<LossName>,
    #[serde(default = "default_gradcheck_clips")]
    pub clips: u64,
    #[serde(default = "default_min_frames")]
    pub min_frames: usize,
    #[serde(default = "default_max_frames")]
    pub max_frames: usize,
    #[serde(default = "default_min_dim")]
    pub min_dim: usize,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Clips whose frame similarities come closer than this are redrawn, so
    /// no probe straddles a kink of the alignment score.
    #[serde(default = "default_similarity_gap")]
    pub min_similarity_gap: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_losses() -> Vec<LossName> {
    vec![LossName::Vlo, LossName::Bb, LossName::Actol, LossName::LastFrame, LossName::FutureFrame]
}
fn default_gradcheck_clips() -> u64 {
    100
}
fn default_min_frames() -> usize {
    3
}
fn default_max_frames() -> usize {
    12
}
fn default_min_dim() -> usize {
    2
}
fn default_max_dim() -> usize {
    16
}
fn default_step() -> f64 {
    DEFAULT_FD_STEP
}
fn default_temperature() -> f64 {
    1.0
}
fn default_lambda() -> f64 {
    actol_core::DEFAULT_BRIDGE_WEIGHT
}
fn default_similarity_gap() -> f64 {
    1e-2
}
fn default_tolerance() -> f64 {
    1e-5
}

/// Reads and parses a config file; any failure is a config error.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
    toml::from_str(&text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })
}

/// Output directory: `--out` wins over the config's `out_dir`.
pub fn out_dir(cli: Option<&Path>, config: Option<&Path>) -> PathBuf {
    cli.or(config).map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}
