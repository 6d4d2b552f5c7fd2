//! Specification ingestion: normalization, clause segmentation, chunking,
//! and multimodal component extraction into a unified component space.
//!
//! A specification decomposes into text, table, and figure components. Text
//! components are clause body chunks; table and figure components carry a
//! structured JSON description produced through the gateway. All three kinds
//! share one id scheme, `spec_id/clause_id/kind/seq`, and one citation
//! surface.

mod chunk;
mod extract;
mod io;
mod normalize;
mod segment;
mod space;

pub use chunk::{chunk_clause, paragraph_spans, sentence_count, sentence_spans, Granularity};
pub use extract::{extract_structured_description, identify_components, RegionProvenance};
pub use io::read_corpus_dir;
pub use normalize::{normalize_document, NormalizeConfig};
pub use segment::{segment_clauses, PREAMBLE_CLAUSE_ID};
pub use space::{
    assemble_component_space, parse_component_id, read_component_space, verify_stats,
    write_component_space, SpaceStats, EXTRACTION_SCHEMA_VERSION, SPACE_SCHEMA_VERSION,
};

use std::io as stdio;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::GatewayError;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("input is not valid UTF-8 (enable lossy decoding to accept it)")]
    UndecodableInput,
    #[error("document {0:?} is empty after normalization")]
    EmptyDocument(String),
    #[error("duplicate spec id {0:?}")]
    DuplicateSpecId(String),
    #[error("spec id {0:?} is invalid: {1}")]
    InvalidSpecId(String, &'static str),
    #[error("model output violates the extraction schema after one repair retry: {0}")]
    ModelOutputSchemaViolation(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("corpus layout error at {path}: {detail}")]
    Layout { path: PathBuf, detail: String },
    #[error("io error at {path}: {source}")]
    Io { path: PathBuf, source: stdio::Error },
    #[error("malformed component space file at line {line}: {detail}")]
    MalformedSpace { line: usize, detail: String },
}

/// One clause of a specification document.
///
/// `clause_id` follows the grammar `digits ('.' digits)*` with an optional
/// single trailing letter (for example `5.5.2.2` or `9.11.3a`). Raw table
/// and figure region payloads attach to the clause they cite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub clause_id: String,
    pub title: String,
    pub body_text: String,
    #[serde(default)]
    pub table_regions: Vec<String>,
    #[serde(default)]
    pub figure_regions: Vec<String>,
}

impl Clause {
    /// Clause id of the parent (the id minus its last dotted segment).
    pub fn parent_id(&self) -> Option<String> {
        parent_of(&self.clause_id)
    }
}

pub(crate) fn parent_of(clause_id: &str) -> Option<String> {
    clause_id.rfind('.').map(|at| clause_id[..at].to_string())
}

/// Whether `id` matches the clause id grammar.
pub fn is_valid_clause_id(id: &str) -> bool {
    if id.is_empty() {
        return false;
    }
    let segments: Vec<&str> = id.split('.').collect();
    segments.iter().enumerate().all(|(i, segment)| {
        if segment.is_empty() {
            return false;
        }
        let all_digits = segment.bytes().all(|b| b.is_ascii_digit());
        let last = i == segments.len() - 1;
        let digits_then_letter = last
            && segment.len() >= 2
            && segment[..segment.len() - 1]
                .bytes()
                .all(|b| b.is_ascii_digit())
            && segment
                .bytes()
                .last()
                .is_some_and(|b| b.is_ascii_lowercase());
        all_digits || digits_then_letter
    })
}

/// A normalized document: ordered clauses plus identification metadata.
///
/// Clauses are stored flat in document order; nesting is derived from the
/// id grammar (a child id extends its parent by one dotted segment), so
/// out-of-order headings nest by prefix only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedDocument {
    pub spec_id: String,
    pub release: String,
    pub clauses: Vec<Clause>,
}

impl NormalizedDocument {
    pub fn clause(&self, clause_id: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.clause_id == clause_id)
    }

    pub fn clause_mut(&mut self, clause_id: &str) -> Option<&mut Clause> {
        self.clauses.iter_mut().find(|c| c.clause_id == clause_id)
    }

    /// Children of `clause_id`, in document order: clauses whose nearest
    /// present ancestor is `clause_id`.
    pub fn children_of(&self, clause_id: &str) -> Vec<&Clause> {
        self.clauses
            .iter()
            .filter(|c| {
                self.nearest_ancestor(&c.clause_id)
                    .is_some_and(|parent| parent == clause_id)
            })
            .collect()
    }

    /// Nearest proper dotted-prefix ancestor that exists in this document.
    pub fn nearest_ancestor(&self, clause_id: &str) -> Option<&str> {
        let mut candidate = parent_of(clause_id);
        while let Some(id) = candidate {
            if let Some(found) = self.clauses.iter().find(|c| c.clause_id == id) {
                return Some(found.clause_id.as_str());
            }
            candidate = parent_of(&id);
        }
        None
    }

    /// Deterministic plain-text rendition. Normalizing the rendition yields
    /// the same document again.
    pub fn rendered_text(&self) -> String {
        let mut out = String::new();
        for clause in &self.clauses {
            if clause.clause_id != segment::PREAMBLE_CLAUSE_ID {
                if clause.title.is_empty() {
                    out.push_str(&clause.clause_id);
                } else {
                    out.push_str(&format!("{} {}", clause.clause_id, clause.title));
                }
                out.push('\n');
            }
            if !clause.body_text.is_empty() {
                out.push_str(&clause.body_text);
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

/// Component kind within the unified space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Text,
    Table,
    Figure,
}

impl ComponentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::Text => "text",
            ComponentKind::Table => "table",
            ComponentKind::Figure => "figure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "text" => Some(ComponentKind::Text),
            "table" => Some(ComponentKind::Table),
            "figure" => Some(ComponentKind::Figure),
            _ => None,
        }
    }
}

impl std::fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One text, table, or figure chunk with clause provenance.
///
/// For table and figure kinds `content` is a JSON object (serialized as
/// text) conforming to the extraction schema, and `label` carries the
/// printed identifier (for example `Table 9.11.3.20`). Text chunks have no
/// label. `source_char_span` is the byte span of the chunk within the
/// normalized clause body (zero-length for extracted components).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecComponent {
    pub component_id: String,
    pub kind: ComponentKind,
    pub spec_id: String,
    pub clause_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub content: String,
    pub source_char_span: (usize, usize),
}

/// The unified component space over one or more specifications.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSpace {
    pub spec_ids: std::collections::BTreeSet<String>,
    pub components: Vec<SpecComponent>,
    pub stats: SpaceStats,
}
