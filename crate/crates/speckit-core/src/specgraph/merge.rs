//! KG-block retrieval and context merging across the two evidence sources.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{parse_component_id, ComponentKind, ComponentSpace, SpecComponent};
use crate::retrieval::{parse_citation, EvidenceSet, HybridIndex, RetrievalError};

use super::KgBlock;

/// Wrap a rendered KG block as a text component so the standard index can
/// serve it. The component cites the block's source clause.
pub fn kg_block_to_component(block: &KgBlock) -> SpecComponent {
    let parts = parse_citation(&block.citation);
    let (spec_id, clause_id) = match parts {
        Some(parts) => (parts.spec_id, parts.clause_id),
        None => ("unknown".to_string(), "0".to_string()),
    };
    SpecComponent {
        component_id: format!("{spec_id}/{clause_id}/text/0"),
        kind: ComponentKind::Text,
        spec_id,
        clause_id,
        label: None,
        content: block.rendered_text.clone(),
        source_char_span: (0, block.rendered_text.len()),
    }
}

/// Assemble a component space over rendered KG blocks (one text component
/// per block), ready for `retrieval::build_index`.
pub fn build_kg_space(blocks: &[KgBlock]) -> ComponentSpace {
    let components: Vec<SpecComponent> = blocks.iter().map(kg_block_to_component).collect();
    let spec_ids: BTreeSet<String> = components.iter().map(|c| c.spec_id.clone()).collect();
    let stats = crate::corpus::verify_stats(&ComponentSpace {
        spec_ids: spec_ids.clone(),
        components: components.clone(),
        stats: Default::default(),
    });
    ComponentSpace {
        spec_ids,
        components,
        stats,
    }
}

/// Retrieval over a KG-block index: the identical contract to
/// `HybridIndex::retrieve`, with citation labels pointing at source clauses.
pub fn kg_retrieve(index: &HybridIndex, query: &str) -> Result<EvidenceSet, RetrievalError> {
    index.retrieve(query)
}

/// One merged context entry fed to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextItem {
    pub label: String,
    pub content: String,
    pub fused: f64,
    pub component_id: String,
}

/// Interleave raw-chunk and KG evidence by fused score descending,
/// deduplicate by source clause (first hit wins), truncate to `budget`.
pub fn merge_context(
    chunk_evidence: &EvidenceSet,
    kg_evidence: &EvidenceSet,
    budget: usize,
) -> Vec<ContextItem> {
    let mut merged: Vec<&crate::retrieval::EvidenceItem> = chunk_evidence
        .items
        .iter()
        .chain(kg_evidence.items.iter())
        .collect();
    merged.sort_by(|a, b| {
        b.score
            .fused
            .total_cmp(&a.score.fused)
            .then_with(|| a.component_id.cmp(&b.component_id))
    });

    let mut seen_clauses: BTreeSet<(String, String)> = BTreeSet::new();
    let mut out = Vec::new();
    for item in merged {
        if out.len() >= budget {
            break;
        }
        let clause_key = parse_component_id(&item.component_id)
            .map(|(spec, clause, _, _)| (spec, clause))
            .unwrap_or_else(|| (String::new(), item.label.clone()));
        if !seen_clauses.insert(clause_key) {
            continue;
        }
        out.push(ContextItem {
            label: item.label.clone(),
            content: item.content.clone(),
            fused: item.score.fused,
            component_id: item.component_id.clone(),
        });
    }
    out
}
