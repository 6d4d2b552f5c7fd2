//! Hybrid sparse/dense retrieval over the component space.
//!
//! The sparse side is BM25 over an inverted index; the dense side encodes
//! chunks and queries as TF-IDF vectors projected into a low-rank latent
//! space by a truncated SVD and compares them by cosine. Per query, both
//! score vectors are min-max normalized over all candidate chunks and fused
//! as `alpha * sparse + (1 - alpha) * dense`; the top-k chunks form the
//! evidence set, each with a citation label rendered from its provenance.

mod citation;
mod dense;
mod index;
mod sparse;
pub mod svd;
mod tokenize;

pub use citation::{parse_citation, render_citation, CitationParts};
pub use index::{build_index, HybridIndex};
pub use tokenize::tokenize;

use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ComponentKind;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("corpus is empty after granularity filtering")]
    EmptyCorpus,
    #[error("svd dimension {requested} exceeds min(#chunks, vocabulary) = {max}")]
    SvdDimTooLarge { requested: usize, max: usize },
    #[error("unknown chunk {0:?}")]
    UnknownChunk(String),
    #[error("query is empty after tokenization")]
    EmptyQuery,
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRangeInput { name: &'static str, value: f64 },
    #[error("invalid retrieval config: {0}")]
    InvalidConfig(String),
    #[error("io error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed index file {path}: {detail}")]
    Malformed { path: PathBuf, detail: String },
}

/// Requested truncated-SVD dimensionality.
///
/// `Auto` caps at the corpus size; an explicit dimension larger than the
/// corpus allows is an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SvdDim {
    Exact(usize),
    Auto { auto: usize },
}

impl Default for SvdDim {
    fn default() -> Self {
        SvdDim::Auto { auto: 256 }
    }
}

impl SvdDim {
    /// Resolve against the corpus bound `max = min(#chunks, vocabulary)`.
    pub fn resolve(self, max: usize) -> Result<usize, RetrievalError> {
        match self {
            SvdDim::Auto { auto } => Ok(auto.min(max).max(1).min(max.max(1))),
            SvdDim::Exact(requested) => {
                if requested == 0 {
                    Err(RetrievalError::InvalidConfig(
                        "svd_dim must be positive".to_string(),
                    ))
                } else if requested > max {
                    Err(RetrievalError::SvdDimTooLarge { requested, max })
                } else {
                    Ok(requested)
                }
            }
        }
    }
}

/// Retrieval configuration. `alpha` weights the sparse score; `k` is the
/// evidence budget; `kinds` filters which component kinds are indexed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub alpha: f64,
    pub k: usize,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    pub svd_dim: SvdDim,
    pub kinds: Vec<ComponentKind>,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            k: 8,
            bm25_k1: 1.2,
            bm25_b: 0.75,
            svd_dim: SvdDim::default(),
            kinds: vec![
                ComponentKind::Text,
                ComponentKind::Table,
                ComponentKind::Figure,
            ],
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if !(0.0..=1.0).contains(&self.alpha) || !self.alpha.is_finite() {
            return Err(RetrievalError::InvalidConfig(format!(
                "alpha = {} must lie in [0, 1]",
                self.alpha
            )));
        }
        if self.k == 0 {
            return Err(RetrievalError::InvalidConfig("k must be >= 1".to_string()));
        }
        if !self.bm25_k1.is_finite() || self.bm25_k1 < 0.0 {
            return Err(RetrievalError::InvalidConfig(format!(
                "bm25_k1 = {} must be finite and non-negative",
                self.bm25_k1
            )));
        }
        if !(0.0..=1.0).contains(&self.bm25_b) {
            return Err(RetrievalError::InvalidConfig(format!(
                "bm25_b = {} must lie in [0, 1]",
                self.bm25_b
            )));
        }
        if self.kinds.is_empty() {
            return Err(RetrievalError::InvalidConfig(
                "kinds filter must keep at least one component kind".to_string(),
            ));
        }
        Ok(())
    }
}

/// Per-chunk score decomposition for one query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub sparse_raw: f64,
    pub dense_raw: f64,
    pub sparse_norm: f64,
    pub dense_norm: f64,
    pub fused: f64,
}

/// One retrieved chunk with its citation label and scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub component_id: String,
    pub label: String,
    pub content: String,
    pub score: ScoreBreakdown,
}

/// Ranked evidence for one query: items sorted by fused score descending,
/// ties broken by component id ascending, at most `k` of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSet {
    pub query: String,
    pub items: Vec<EvidenceItem>,
    pub m: usize,
}

/// Weighted fusion of normalized scores: `alpha * sparse + (1 - alpha) * dense`.
pub fn hybrid_score(sparse_norm: f64, dense_norm: f64, alpha: f64) -> Result<f64, RetrievalError> {
    for (name, value) in [
        ("sparse_norm", sparse_norm),
        ("dense_norm", dense_norm),
        ("alpha", alpha),
    ] {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(RetrievalError::OutOfRangeInput { name, value });
        }
    }
    Ok(alpha * sparse_norm + (1.0 - alpha) * dense_norm)
}

/// Min-max normalization over a score vector: the maximum maps to 1 and the
/// minimum to 0; a constant vector maps to all zeros.
pub fn min_max_normalize(scores: &[f64]) -> Vec<f64> {
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !min.is_finite() || !max.is_finite() || max <= min {
        return vec![0.0; scores.len()];
    }
    scores.iter().map(|s| (s - min) / (max - min)).collect()
}
