//! Deterministic rendering of a clause graph into a text block, and the
//! exact inverse parse over the Entities/Relations sections.
//!
//! Block layout:
//!
//! ```text
//! <citation>
//! Entities:
//! <name> [<type>]          (sorted by name, then type)
//! Relations:
//! <source> -<relation>-> <target>   (sorted by source, relation, target)
//! Original text:
//! <original clause text>
//! ```

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

use super::{validate_graph, EntityTag, GraphError, KgBlock, RelationTag, SpecGraph};

const ENTITIES_HEADER: &str = "Entities:";
const RELATIONS_HEADER: &str = "Relations:";
const ORIGINAL_HEADER: &str = "Original text:";

/// Render a valid graph and the original clause text into a block.
pub fn render_kg_block(graph: &SpecGraph, original_text: &str) -> Result<KgBlock, GraphError> {
    let report = validate_graph(graph);
    if !report.is_valid() {
        return Err(GraphError::InvalidGraph { report });
    }

    let names: HashMap<&str, &str> = graph
        .nodes
        .iter()
        .map(|n| (n.node_id.as_str(), n.name.as_str()))
        .collect();

    let mut entity_list: Vec<(String, EntityTag)> = graph
        .nodes
        .iter()
        .map(|n| (n.name.clone(), n.entity_type.clone()))
        .collect();
    entity_list.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.as_str().cmp(b.1.as_str())));

    let mut relation_list: Vec<(String, RelationTag, String)> = graph
        .edges
        .iter()
        .map(|e| {
            (
                names[e.source.as_str()].to_string(),
                e.relation_type.clone(),
                names[e.target.as_str()].to_string(),
            )
        })
        .collect();
    relation_list.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| a.1.as_str().cmp(b.1.as_str()))
            .then_with(|| a.2.cmp(&b.2))
    });

    let mut text = String::new();
    text.push_str(&graph.source_clause);
    text.push('\n');
    text.push_str(ENTITIES_HEADER);
    text.push('\n');
    for (name, tag) in &entity_list {
        text.push_str(&format!("{name} [{}]\n", tag.as_str()));
    }
    text.push_str(RELATIONS_HEADER);
    text.push('\n');
    for (source, relation, target) in &relation_list {
        text.push_str(&format!("{source} -{}-> {target}\n", relation.as_str()));
    }
    text.push_str(ORIGINAL_HEADER);
    text.push('\n');
    text.push_str(original_text);

    Ok(KgBlock {
        citation: graph.source_clause.clone(),
        rendered_text: text,
        entity_list,
        relation_list,
        original_text: original_text.to_string(),
    })
}

/// The sections recovered from a rendered block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedBlock {
    pub citation: String,
    pub entities: Vec<(String, EntityTag)>,
    pub relations: Vec<(String, RelationTag, String)>,
    pub original_text: String,
}

/// Exact inverse of [`render_kg_block`] over the rendered text.
pub fn parse_kg_block(rendered: &str) -> Result<ParsedBlock, GraphError> {
    static ENTITY_RE: OnceLock<Regex> = OnceLock::new();
    static RELATION_RE: OnceLock<Regex> = OnceLock::new();
    let entity_re =
        ENTITY_RE.get_or_init(|| Regex::new(r"^(.+) \[([A-Za-z][A-Za-z ]*)\]$").unwrap());
    let relation_re =
        RELATION_RE.get_or_init(|| Regex::new(r"^(.+?) -([A-Za-z_]+)-> (.+)$").unwrap());

    let mut lines = rendered.lines();
    let citation = lines
        .next()
        .filter(|l| !l.trim().is_empty())
        .ok_or_else(|| GraphError::BlockParse("missing citation line".to_string()))?
        .to_string();
    if lines.next() != Some(ENTITIES_HEADER) {
        return Err(GraphError::BlockParse(format!(
            "expected {ENTITIES_HEADER:?} after the citation"
        )));
    }

    let mut entities = Vec::new();
    let mut relations = Vec::new();
    let mut section = ENTITIES_HEADER;
    let mut original_lines: Vec<&str> = Vec::new();
    for line in lines {
        match (section, line) {
            (ENTITIES_HEADER, RELATIONS_HEADER) => section = RELATIONS_HEADER,
            (RELATIONS_HEADER, ORIGINAL_HEADER) => section = ORIGINAL_HEADER,
            (ENTITIES_HEADER, entity_line) => {
                let cap = entity_re.captures(entity_line).ok_or_else(|| {
                    GraphError::BlockParse(format!("bad entity line {entity_line:?}"))
                })?;
                entities.push((cap[1].to_string(), EntityTag::from(cap[2].to_string())));
            }
            (RELATIONS_HEADER, relation_line) => {
                let cap = relation_re.captures(relation_line).ok_or_else(|| {
                    GraphError::BlockParse(format!("bad relation line {relation_line:?}"))
                })?;
                relations.push((
                    cap[1].to_string(),
                    RelationTag::from(cap[2].to_string()),
                    cap[3].to_string(),
                ));
            }
            (_, original_line) => original_lines.push(original_line),
        }
    }
    if section != ORIGINAL_HEADER {
        return Err(GraphError::BlockParse(
            "block is missing the Relations or Original text section".to_string(),
        ));
    }

    Ok(ParsedBlock {
        citation,
        entities,
        relations,
        original_text: original_lines.join("\n"),
    })
}
