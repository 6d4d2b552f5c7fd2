//! Graph extraction through the gateway.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::corpus::{ComponentKind, SpecComponent};
use crate::gateway::Gateway;
use crate::prompts::fill;
use crate::retrieval::CitationParts;

use super::{
    EntityTag, EntityType, GraphEdge, GraphError, GraphNode, RelationTag, RelationType, SpecGraph,
};

/// Entity type given to the synthetic clause node that anchors `defined_in`
/// edges; a clause citation is an identifier of a specification location.
const CLAUSE_NODE_TYPE: EntityType = EntityType::Identifier;

/// Extract the clause graph from the components of one clause.
///
/// The gateway is prompted with the clause text plus any table/figure
/// descriptions and the closed entity/relation vocabularies. Schema or
/// vocabulary failures get one repair retry. Every extracted node and edge
/// is stamped with the clause citation as provenance, and a `defined_in`
/// edge is added from each entity to a synthetic clause node.
pub fn extract_graph(
    components: &[SpecComponent],
    gateway: &Gateway,
) -> Result<SpecGraph, GraphError> {
    let first = components.first().ok_or(GraphError::NoComponents)?;
    let (spec_id, clause_id) = (first.spec_id.clone(), first.clause_id.clone());
    for component in components {
        if component.clause_id != clause_id || component.spec_id != spec_id {
            return Err(GraphError::MixedClauses {
                expected: format!("{spec_id}/{clause_id}"),
                found: format!("{}/{}", component.spec_id, component.clause_id),
            });
        }
    }

    let citation = CitationParts {
        spec_id: spec_id.clone(),
        clause_id: clause_id.clone(),
        unit_label: None,
    }
    .render();

    let mut clause_content = String::new();
    for component in components {
        if component.kind != ComponentKind::Text {
            clause_content.push_str(&format!("[{}]\n", component.label.as_deref().unwrap_or("")));
        }
        clause_content.push_str(&component.content);
        clause_content.push_str("\n\n");
    }

    let entity_types = EntityType::ALL
        .iter()
        .map(|t| t.as_str())
        .collect::<Vec<_>>()
        .join(", ");
    let relation_types = RelationType::ALL
        .iter()
        .map(|t| t.as_str())
        .collect::<Vec<_>>()
        .join(", ");
    let prompt = fill(
        &gateway.prompts().kg_extraction,
        &[
            ("entity_types", entity_types.as_str()),
            ("relation_types", relation_types.as_str()),
            ("clause", clause_content.trim()),
        ],
    );

    let mut last_error: Option<GraphError> = None;
    for attempt in 0..2 {
        let effective_prompt = if attempt == 0 {
            prompt.clone()
        } else {
            let reason = match &last_error {
                Some(err) => err.to_string(),
                None => String::new(),
            };
            format!(
                "{prompt}\n\nYour previous reply was rejected: {reason}. \
                 Reply with only the required JSON object and use only the listed types."
            )
        };
        let response = gateway.complete(&gateway.request("", &effective_prompt))?;
        match parse_graph_reply(&response, &citation, &spec_id, &clause_id) {
            Ok(graph) => return Ok(graph),
            Err(
                err @ (GraphError::ModelOutputSchemaViolation(_)
                | GraphError::VocabularyViolation(_)),
            ) => last_error = Some(err),
            Err(err) => return Err(err),
        }
    }
    Err(last_error.expect("two failed attempts leave an error"))
}

fn parse_graph_reply(
    response: &str,
    citation: &str,
    spec_id: &str,
    clause_id: &str,
) -> Result<SpecGraph, GraphError> {
    let start = response.find('{');
    let end = response.rfind('}');
    let (Some(start), Some(end)) = (start, end) else {
        return Err(GraphError::ModelOutputSchemaViolation(
            "reply contains no JSON object".to_string(),
        ));
    };
    let value: Value = serde_json::from_str(&response[start..=end])
        .map_err(|err| GraphError::ModelOutputSchemaViolation(format!("invalid JSON: {err}")))?;
    let raw_nodes = value
        .get("nodes")
        .and_then(Value::as_array)
        .ok_or_else(|| {
            GraphError::ModelOutputSchemaViolation("missing \"nodes\" array".to_string())
        })?;
    let raw_edges = value
        .get("edges")
        .and_then(Value::as_array)
        .ok_or_else(|| {
            GraphError::ModelOutputSchemaViolation("missing \"edges\" array".to_string())
        })?;

    // Canonicalize and dedup nodes; the first occurrence fixes the type.
    let mut nodes: Vec<GraphNode> = Vec::new();
    let mut canonical_ids: BTreeMap<String, String> = BTreeMap::new();
    for raw in raw_nodes {
        let name = raw.get("name").and_then(Value::as_str).ok_or_else(|| {
            GraphError::ModelOutputSchemaViolation("node without a string name".to_string())
        })?;
        let tag = raw
            .get("entity_type")
            .and_then(Value::as_str)
            .ok_or_else(|| {
                GraphError::ModelOutputSchemaViolation(
                    "node without a string entity_type".to_string(),
                )
            })?;
        let entity_type = EntityType::parse(tag)
            .ok_or_else(|| GraphError::VocabularyViolation(format!("entity type {tag:?}")))?;
        let canonical = canonical_name(name, entity_type);
        if canonical.is_empty() {
            return Err(GraphError::ModelOutputSchemaViolation(
                "node with an empty name".to_string(),
            ));
        }
        let dedup_key = canonical.to_uppercase();
        if canonical_ids.contains_key(&dedup_key) {
            continue;
        }
        canonical_ids.insert(dedup_key, canonical.clone());
        nodes.push(GraphNode {
            node_id: canonical.clone(),
            name: canonical,
            entity_type: EntityTag::Known(entity_type),
            provenance: citation.to_string(),
        });
    }

    let mut edges: Vec<GraphEdge> = Vec::new();
    for raw in raw_edges {
        let get = |key: &str| -> Result<&str, GraphError> {
            raw.get(key).and_then(Value::as_str).ok_or_else(|| {
                GraphError::ModelOutputSchemaViolation(format!("edge without a string {key:?}"))
            })
        };
        let source = get("source")?;
        let target = get("target")?;
        let tag = get("relation_type")?;
        let relation_type = RelationType::parse(tag)
            .ok_or_else(|| GraphError::VocabularyViolation(format!("relation type {tag:?}")))?;
        let resolve = |endpoint: &str| -> Result<String, GraphError> {
            canonical_ids
                .get(&endpoint.trim().to_uppercase())
                .cloned()
                .ok_or_else(|| {
                    GraphError::ModelOutputSchemaViolation(format!(
                        "edge endpoint {endpoint:?} names no extracted node"
                    ))
                })
        };
        let source = resolve(source)?;
        let target = resolve(target)?;
        if relation_type == RelationType::StateTransition && source == target {
            return Err(GraphError::ModelOutputSchemaViolation(
                "state_transition between identical states".to_string(),
            ));
        }
        edges.push(GraphEdge {
            source,
            target,
            relation_type: RelationTag::Known(relation_type),
            provenance: citation.to_string(),
        });
    }

    // Anchor every entity to its clause through defined_in.
    let clause_node_id = citation.to_string();
    let entity_ids: Vec<String> = nodes.iter().map(|n| n.node_id.clone()).collect();
    nodes.push(GraphNode {
        node_id: clause_node_id.clone(),
        name: clause_node_id.clone(),
        entity_type: EntityTag::Known(CLAUSE_NODE_TYPE),
        provenance: citation.to_string(),
    });
    for entity_id in entity_ids {
        edges.push(GraphEdge {
            source: entity_id,
            target: clause_node_id.clone(),
            relation_type: RelationTag::Known(RelationType::DefinedIn),
            provenance: citation.to_string(),
        });
    }

    Ok(SpecGraph {
        graph_id: format!("{spec_id}/{clause_id}"),
        source_clause: citation.to_string(),
        nodes,
        edges,
    })
}

/// Upper-case message, timer, and state names; collapse whitespace for the
/// rest (specification spelling preserved).
fn canonical_name(raw: &str, entity_type: EntityType) -> String {
    let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    match entity_type {
        EntityType::Message | EntityType::Timer | EntityType::State => collapsed.to_uppercase(),
        _ => collapsed,
    }
}
