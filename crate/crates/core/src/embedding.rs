//! Embedding vectors, clips and the pairwise alignment score.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Tolerance on `|‖v‖ - 1|` for a vector to count as unit-norm.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

/// A real embedding of dimension `d >= 2` with finite components.
///
/// Vectors produced by [`normalize`] are unit-norm. Losses accept any nonzero
/// vector because cosine similarity normalises internally, which is what lets
/// finite differences perturb coordinates freely.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::DimensionTooSmall(components.len()));
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteComponent);
        }
        Ok(Self(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        math::norm(&self.0)
    }

    pub fn is_unit(&self) -> bool {
        libm::fabs(self.norm() - 1.0) <= UNIT_NORM_TOLERANCE
    }

    /// Returns the unit vector pointing the same way.
    pub fn normalized(&self) -> Result<Self> {
        normalize(&self.0)
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Projects a raw vector onto the unit sphere.
pub fn normalize(raw: &[f64]) -> Result<EmbeddingVector> {
    if raw.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFiniteComponent);
    }
    let n = math::norm(raw);
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    EmbeddingVector::new(raw.iter().map(|c| c / n).collect())
}

/// Cosine similarity of two nonzero vectors of equal dimension.
pub fn cosine_sim(v: &EmbeddingVector, l: &EmbeddingVector) -> Result<f64> {
    raw_cosine(v.as_slice(), l.as_slice())
}

pub(crate) fn raw_cosine(v: &[f64], l: &[f64]) -> Result<f64> {
    if v.len() != l.len() {
        return Err(Error::DimensionMismatch { expected: l.len(), found: v.len() });
    }
    let nv = math::norm(v);
    let nl = math::norm(l);
    if nv == 0.0 || nl == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((math::dot(v, l) / (nv * nl)).clamp(-1.0, 1.0))
}

/// Negative absolute difference of two frames' similarities to the language.
///
/// Always lies in `[-2, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlignmentScore(f64);

impl AlignmentScore {
    /// Score from two precomputed similarities.
    pub fn from_similarities(sim_i: f64, sim_j: f64) -> Self {
        Self(-libm::fabs(sim_i - sim_j))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn alignment_score(v_i: &EmbeddingVector, v_j: &EmbeddingVector, l: &EmbeddingVector) -> Result<AlignmentScore> {
    if v_i.dim() != v_j.dim() {
        return Err(Error::DimensionMismatch { expected: v_i.dim(), found: v_j.dim() });
    }
    Ok(AlignmentScore::from_similarities(cosine_sim(v_i, l)?, cosine_sim(v_j, l)?))
}

/// Ordered frames with timestamps, their embeddings, and a language embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipSequence {
    timestamps: Vec<u64>,
    frames: Vec<EmbeddingVector>,
    language: EmbeddingVector,
}

impl ClipSequence {
    pub fn new(timestamps: Vec<u64>, frames: Vec<EmbeddingVector>, language: EmbeddingVector) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::TooFewFrames { min: 2, found: frames.len() });
        }
        if timestamps.len() != frames.len() {
            return Err(Error::LengthMismatch { what: "timestamps", expected: frames.len(), found: timestamps.len() });
        }
        if let Some(pos) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::TimestampsNotIncreasing(pos + 1));
        }
        let d = language.dim();
        if let Some(bad) = frames.iter().find(|f| f.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: bad.dim() });
        }
        Ok(Self { timestamps, frames, language })
    }

    /// Convenience constructor from raw rows; every vector is normalised.
    pub fn from_raw(timestamps: Vec<u64>, frames: &[Vec<f64>], language: &[f64]) -> Result<Self> {
        let frames = frames.iter().map(|f| normalize(f)).collect::<Result<Vec<_>>>()?;
        Self::new(timestamps, frames, normalize(language)?)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.language.dim()
    }

    pub fn timestamps(&self) -> &[u64] {
        &self.timestamps
    }

    pub fn frames(&self) -> &[EmbeddingVector] {
        &self.frames
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        self.frames[i].as_slice()
    }

    pub fn language(&self) -> &EmbeddingVector {
        &self.language
    }

    pub(crate) fn frame_mut(&mut self, i: usize) -> &mut [f64] {
        self.frames[i].as_mut_slice()
    }

    pub(crate) fn language_mut(&mut self) -> &mut [f64] {
        self.language.as_mut_slice()
    }

    /// Absolute timestamp difference between two frames.
    pub fn distance(&self, i: usize, j: usize) -> u64 {
        self.timestamps[i].abs_diff(self.timestamps[j])
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index: i, len: self.len() })
        }
    }

    /// Cosine similarity of every frame to the language embedding.
    pub fn similarities(&self) -> Result<Vec<f64>> {
        self.frames.iter().map(|f| cosine_sim(f, &self.language)).collect()
    }

    /// Returns the clip with every frame and the language projected to the unit sphere.
    pub fn normalized(&self) -> Result<Self> {
        let frames = self.frames.iter().map(EmbeddingVector::normalized).collect::<Result<Vec<_>>>()?;
        Ok(Self { timestamps: self.timestamps.clone(), frames, language: self.language.normalized()? })
    }

    /// Same frames and timestamps with a different language embedding.
    pub fn with_language(&self, language: EmbeddingVector) -> Result<Self> {
        Self::new(self.timestamps.clone(), self.frames.clone(), language)
    }

    pub fn into_parts(self) -> (Vec<u64>, Vec<EmbeddingVector>, EmbeddingVector) {
        (self.timestamps, self.frames, self.language)
    }
}
