//! Clip JSON, CSV and report writers, and the seed fan-out pool.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use actol_core::{ClipSequence, EmbeddingVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const THREADS_ENV: &str = "ACTOL_THREADS";

/// On-disk clip. Readers ignore extra keys, so report files that embed a
/// clip (with `schema_version` and `config`) load as clips too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipFile {
    pub d: usize,
    pub timestamps: Vec<u64>,
    pub embeddings: Vec<Vec<f64>>,
    pub language: Vec<f64>,
}

impl ClipFile {
    pub fn from_clip(clip: &ClipSequence) -> Self {
        Self {
            d: clip.dim(),
            timestamps: clip.timestamps().to_vec(),
            embeddings: clip.frames().iter().map(|f| f.as_slice().to_vec()).collect(),
            language: clip.language().as_slice().to_vec(),
        }
    }

    pub fn into_clip(self) -> actol_core::Result<ClipSequence> {
        let d = self.d;
        let check = |v: &Vec<f64>| {
            if v.len() == d {
                Ok(())
            } else {
                Err(actol_core::Error::DimensionMismatch { expected: d, found: v.len() })
            }
        };
        self.embeddings.iter().try_for_each(check)?;
        check(&self.language)?;
        let frames = self.embeddings.into_iter().map(EmbeddingVector::new).collect::<actol_core::Result<Vec<_>>>()?;
        ClipSequence::new(self.timestamps, frames, EmbeddingVector::new(self.language)?)
    }
}

pub fn read_clip(path: &Path) -> Result<ClipSequence> {
    let clip_err = |message: String| CliError::Clip { path: path.to_path_buf(), message };
    let text = fs::read_to_string(path).map_err(|e| clip_err(e.to_string()))?;
    let file: ClipFile = serde_json::from_str(&text).map_err(|e| clip_err(e.to_string()))?;
    file.into_clip().map_err(|e| clip_err(e.to_string()))
}

/// Report envelope: version and resolved config first, then the payload's fields.
#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, P: Serialize> {
    pub schema_version: u32,
    pub config: &'a C,
    #[serde(flatten)]
    pub payload: P,
}

pub fn write_report<C: Serialize, P: Serialize>(path: &Path, config: &C, payload: P) -> Result<()> {
    let env = Envelope { schema_version: SCHEMA_VERSION, config, payload };
    let mut text = serde_json::to_string_pretty(&env).expect("report serialises");
    text.push('\n');
    write_file(path, &text)
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Comma-separated rows with shortest round-trip float formatting.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match cell {
                Cell::Int(v) => write!(self.text, "{v}"),
                Cell::Float(v) => write!(self.text, "{v:?}"),
            }
            .expect("writing to a String");
        }
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.text)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

/// Thread count from `ACTOL_THREADS`; unset or `0` lets rayon decide.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))),
    }
}

/// Maps `f` over `items` in parallel and returns results in input order.
pub fn par_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| CliError::Threads(e.to_string()))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_round_trip_floats() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&[Cell::Int(3), Cell::Float(0.1 + 0.2)]);
        csv.row(&[Cell::Int(4), Cell::Float(1.0)]);
        assert_eq!(csv.as_str(), "a,b\n3,0.30000000000000004\n4,1.0\n");
    }

    #[test]
    fn clip_file_rejects_ragged_embeddings() {
        let f = ClipFile {
            d: 2,
            timestamps: vec![0, 1],
            embeddings: vec![vec![1.0, 0.0], vec![1.0]],
            language: vec![0.0, 1.0],
        };
        assert!(f.into_clip().is_err());
    }
}
