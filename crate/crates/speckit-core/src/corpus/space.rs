//! Component space assembly and JSON-lines persistence.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::gateway::Gateway;

use super::chunk::{chunk_clause, sentence_count, Granularity};
use super::extract::{extract_structured_description, RegionProvenance};
use super::{ComponentKind, ComponentSpace, CorpusError, NormalizedDocument, SpecComponent};

/// Version of the component space file layout.
pub const SPACE_SCHEMA_VERSION: u32 = 1;
/// Version of the table/figure extraction JSON schema.
pub const EXTRACTION_SCHEMA_VERSION: u32 = 1;

/// Corpus-wide counts. Paragraph and sentence counts are derived from the
/// clause text chunks; figure and table counts from extracted components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SpaceStats {
    pub paragraphs: usize,
    pub sentences: usize,
    pub figures: usize,
    pub tables: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpaceMeta {
    schema_version: u32,
    extraction_schema_version: u32,
    stats: SpaceStats,
    spec_ids: BTreeSet<String>,
}

/// Assemble the unified component space: paragraph text chunks by default,
/// plus table and figure components extracted through the gateway.
///
/// Component ids follow `spec_id/clause_id/kind/seq` and are globally
/// unique because spec ids are unique and clause ids are unique per
/// document.
pub fn assemble_component_space(
    documents: &[NormalizedDocument],
    gateway: &Gateway,
    granularity: Granularity,
) -> Result<ComponentSpace, CorpusError> {
    let mut spec_ids = BTreeSet::new();
    for doc in documents {
        if !spec_ids.insert(doc.spec_id.clone()) {
            return Err(CorpusError::DuplicateSpecId(doc.spec_id.clone()));
        }
    }

    let mut components: Vec<SpecComponent> = Vec::new();
    let mut stats = SpaceStats::default();

    for doc in documents {
        for clause in &doc.clauses {
            let text_chunks = chunk_clause(clause, granularity, &doc.spec_id);
            match granularity {
                Granularity::Paragraph => {
                    stats.paragraphs += text_chunks.len();
                    stats.sentences += text_chunks
                        .iter()
                        .map(|c| sentence_count(&c.content))
                        .sum::<usize>();
                }
                Granularity::Sentence => {
                    stats.sentences += text_chunks.len();
                    stats.paragraphs += super::paragraph_spans(&clause.body_text).len();
                }
            }
            components.extend(text_chunks);

            for (seq, region) in clause.table_regions.iter().enumerate() {
                let provenance = RegionProvenance {
                    spec_id: doc.spec_id.clone(),
                    clause_id: clause.clause_id.clone(),
                    seq,
                };
                components.push(extract_structured_description(
                    region,
                    ComponentKind::Table,
                    &provenance,
                    gateway,
                )?);
                stats.tables += 1;
            }
            for (seq, region) in clause.figure_regions.iter().enumerate() {
                let provenance = RegionProvenance {
                    spec_id: doc.spec_id.clone(),
                    clause_id: clause.clause_id.clone(),
                    seq,
                };
                components.push(extract_structured_description(
                    region,
                    ComponentKind::Figure,
                    &provenance,
                    gateway,
                )?);
                stats.figures += 1;
            }
        }
    }

    Ok(ComponentSpace {
        spec_ids,
        components,
        stats,
    })
}

/// Independent recount of the stats over the components of a
/// paragraph-granularity space.
pub fn verify_stats(space: &ComponentSpace) -> SpaceStats {
    let mut stats = SpaceStats::default();
    for component in &space.components {
        match component.kind {
            ComponentKind::Text => {
                stats.paragraphs += 1;
                stats.sentences += sentence_count(&component.content);
            }
            ComponentKind::Table => stats.tables += 1,
            ComponentKind::Figure => stats.figures += 1,
        }
    }
    stats
}

/// Recover `(spec_id, clause_id, kind, seq)` from a component id.
pub fn parse_component_id(id: &str) -> Option<(String, String, ComponentKind, usize)> {
    let (rest, seq) = id.rsplit_once('/')?;
    let (rest, kind) = rest.rsplit_once('/')?;
    let (spec_id, clause_id) = rest.rsplit_once('/')?;
    let kind = ComponentKind::parse(kind)?;
    let seq: usize = seq.parse().ok()?;
    if spec_id.is_empty() || clause_id.is_empty() {
        return None;
    }
    Some((spec_id.to_string(), clause_id.to_string(), kind, seq))
}

/// Serialize a space as JSON lines: a meta line with schema versions and
/// stats, then one component per line, UTF-8.
pub fn write_component_space(space: &ComponentSpace, path: &Path) -> Result<(), CorpusError> {
    let mut out = String::new();
    let meta = SpaceMeta {
        schema_version: SPACE_SCHEMA_VERSION,
        extraction_schema_version: EXTRACTION_SCHEMA_VERSION,
        stats: space.stats,
        spec_ids: space.spec_ids.clone(),
    };
    out.push_str(&serde_json::to_string(&meta).expect("meta serializes"));
    out.push('\n');
    for component in &space.components {
        out.push_str(&serde_json::to_string(component).expect("component serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_component_space(path: &Path) -> Result<ComponentSpace, CorpusError> {
    let raw = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = raw.lines().enumerate();
    let (_, meta_line) = lines.next().ok_or(CorpusError::MalformedSpace {
        line: 1,
        detail: "file is empty".to_string(),
    })?;
    let meta: SpaceMeta =
        serde_json::from_str(meta_line).map_err(|err| CorpusError::MalformedSpace {
            line: 1,
            detail: format!("bad meta line: {err}"),
        })?;
    if meta.schema_version != SPACE_SCHEMA_VERSION {
        return Err(CorpusError::MalformedSpace {
            line: 1,
            detail: format!("unsupported schema version {}", meta.schema_version),
        });
    }
    let mut components = Vec::new();
    for (index, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let component: SpecComponent =
            serde_json::from_str(line).map_err(|err| CorpusError::MalformedSpace {
                line: index + 1,
                detail: err.to_string(),
            })?;
        components.push(component);
    }
    Ok(ComponentSpace {
        spec_ids: meta.spec_ids,
        components,
        stats: meta.stats,
    })
}
