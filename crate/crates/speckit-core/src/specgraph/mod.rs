//! Taxonomy-based knowledge graphs over specification clauses.
//!
//! A `SpecGraph` is a labeled multi-relational graph: nodes carry one of
//! eight entity types, edges one of fourteen relation types split into a
//! core family (protocol execution structure) and a security family
//! (protection requirements and outcomes). Every node and edge carries
//! provenance pointing at the clause it was extracted from. Graphs render
//! to deterministic text blocks that are themselves retrievable.

mod extract;
mod merge;
mod render;
mod store;
mod validate;

pub use extract::extract_graph;
pub use merge::{build_kg_space, kg_block_to_component, kg_retrieve, merge_context, ContextItem};
pub use render::{parse_kg_block, render_kg_block, ParsedBlock};
pub use store::{graph_path, list_graphs, load_graph, save_graph};
pub use validate::{validate_graph, ValidationReport, Violation, ViolationKind};

use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::GatewayError;

/// The closed set of entity types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityType {
    Procedure,
    Message,
    InformationElement,
    Identifier,
    Timer,
    State,
    Condition,
    Property,
}

impl EntityType {
    pub const ALL: [EntityType; 8] = [
        EntityType::Procedure,
        EntityType::Message,
        EntityType::InformationElement,
        EntityType::Identifier,
        EntityType::Timer,
        EntityType::State,
        EntityType::Condition,
        EntityType::Property,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Procedure => "Procedure",
            EntityType::Message => "Message",
            EntityType::InformationElement => "InformationElement",
            EntityType::Identifier => "Identifier",
            EntityType::Timer => "Timer",
            EntityType::State => "State",
            EntityType::Condition => "Condition",
            EntityType::Property => "Property",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

/// The closed set of relation types: nine core, five security.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationType {
    HasStep,
    ContainsIe,
    RequiresState,
    Starts,
    Stops,
    Resets,
    GuardsBy,
    Establishes,
    DefinedIn,
    RequiresProtection,
    IntegrityRequired,
    MayBeUnprotected,
    ActionTriggeredBy,
    StateTransition,
}

impl RelationType {
    pub const CORE: [RelationType; 9] = [
        RelationType::HasStep,
        RelationType::ContainsIe,
        RelationType::RequiresState,
        RelationType::Starts,
        RelationType::Stops,
        RelationType::Resets,
        RelationType::GuardsBy,
        RelationType::Establishes,
        RelationType::DefinedIn,
    ];

    pub const SECURITY: [RelationType; 5] = [
        RelationType::RequiresProtection,
        RelationType::IntegrityRequired,
        RelationType::MayBeUnprotected,
        RelationType::ActionTriggeredBy,
        RelationType::StateTransition,
    ];

    pub const ALL: [RelationType; 14] = [
        RelationType::HasStep,
        RelationType::ContainsIe,
        RelationType::RequiresState,
        RelationType::Starts,
        RelationType::Stops,
        RelationType::Resets,
        RelationType::GuardsBy,
        RelationType::Establishes,
        RelationType::DefinedIn,
        RelationType::RequiresProtection,
        RelationType::IntegrityRequired,
        RelationType::MayBeUnprotected,
        RelationType::ActionTriggeredBy,
        RelationType::StateTransition,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::HasStep => "has_step",
            RelationType::ContainsIe => "contains_IE",
            RelationType::RequiresState => "requires_state",
            RelationType::Starts => "starts",
            RelationType::Stops => "stops",
            RelationType::Resets => "resets",
            RelationType::GuardsBy => "guards_by",
            RelationType::Establishes => "establishes",
            RelationType::DefinedIn => "defined_in",
            RelationType::RequiresProtection => "requires_protection",
            RelationType::IntegrityRequired => "integrity_required",
            RelationType::MayBeUnprotected => "may_be_unprotected",
            RelationType::ActionTriggeredBy => "action_triggered_by",
            RelationType::StateTransition => "state_transition",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn is_security(self) -> bool {
        Self::SECURITY.contains(&self)
    }
}

/// Entity type tag as stored: a known type or an out-of-vocabulary string
/// that validation will reject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum EntityTag {
    Known(EntityType),
    Unknown(String),
}

impl EntityTag {
    pub fn known(&self) -> Option<EntityType> {
        match self {
            EntityTag::Known(t) => Some(*t),
            EntityTag::Unknown(_) => None,
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            EntityTag::Known(t) => t.as_str(),
            EntityTag::Unknown(s) => s,
        }
    }
}

impl From<EntityType> for EntityTag {
    fn from(t: EntityType) -> Self {
        EntityTag::Known(t)
    }
}

impl From<String> for EntityTag {
    fn from(s: String) -> Self {
        match EntityType::parse(&s) {
            Some(t) => EntityTag::Known(t),
            None => EntityTag::Unknown(s),
        }
    }
}

impl From<EntityTag> for String {
    fn from(tag: EntityTag) -> Self {
        tag.as_str().to_string()
    }
}

/// Relation type tag as stored; mirrors [`EntityTag`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum RelationTag {
    Known(RelationType),
    Unknown(String),
}

impl RelationTag {
    pub fn known(&self) -> Option<RelationType> {
        match self {
            RelationTag::Known(t) => Some(*t),
            RelationTag::Unknown(_) => None,
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            RelationTag::Known(t) => t.as_str(),
            RelationTag::Unknown(s) => s,
        }
    }
}

impl From<RelationType> for RelationTag {
    fn from(t: RelationType) -> Self {
        RelationTag::Known(t)
    }
}

impl From<String> for RelationTag {
    fn from(s: String) -> Self {
        match RelationType::parse(&s) {
            Some(t) => RelationTag::Known(t),
            None => RelationTag::Unknown(s),
        }
    }
}

impl From<RelationTag> for String {
    fn from(tag: RelationTag) -> Self {
        tag.as_str().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub node_id: String,
    pub name: String,
    pub entity_type: EntityTag,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub source: String,
    pub target: String,
    pub relation_type: RelationTag,
    pub provenance: String,
}

/// Per-clause labeled multi-relational graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecGraph {
    pub graph_id: String,
    pub source_clause: String,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl SpecGraph {
    pub fn node(&self, node_id: &str) -> Option<&GraphNode> {
        self.nodes.iter().find(|n| n.node_id == node_id)
    }

    pub fn node_by_name(&self, name: &str) -> Option<&GraphNode> {
        self.nodes.iter().find(|n| n.name == name)
    }
}

/// A clause graph rendered as a retrievable text block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgBlock {
    pub citation: String,
    pub rendered_text: String,
    pub entity_list: Vec<(String, EntityTag)>,
    pub relation_list: Vec<(String, RelationTag, String)>,
    pub original_text: String,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("no components supplied for graph extraction")]
    NoComponents,
    #[error("components span multiple clauses: expected {expected:?}, found {found:?}")]
    MixedClauses { expected: String, found: String },
    #[error("model output violates the graph schema after one repair retry: {0}")]
    ModelOutputSchemaViolation(String),
    #[error("model output uses out-of-vocabulary types after one repair retry: {0}")]
    VocabularyViolation(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("graph is invalid: {report}")]
    InvalidGraph { report: ValidationReport },
    #[error("unparseable kg block: {0}")]
    BlockParse(String),
    #[error("io error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed graph file {path}: {detail}")]
    Malformed { path: PathBuf, detail: String },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_sizes_are_fixed() {
        assert_eq!(EntityType::ALL.len(), 8);
        assert_eq!(RelationType::ALL.len(), 14);
        assert_eq!(RelationType::CORE.len(), 9);
        assert_eq!(RelationType::SECURITY.len(), 5);
        for t in RelationType::CORE {
            assert!(!t.is_security());
        }
        for t in RelationType::SECURITY {
            assert!(t.is_security());
        }
    }

    #[test]
    fn tags_round_trip_through_strings() {
        for t in EntityType::ALL {
            assert_eq!(EntityType::parse(t.as_str()), Some(t));
        }
        for t in RelationType::ALL {
            assert_eq!(RelationType::parse(t.as_str()), Some(t));
        }
        assert_eq!(
            RelationType::parse("contains_IE"),
            Some(RelationType::ContainsIe)
        );
        assert_eq!(RelationType::parse("causes"), None);
    }

    #[test]
    fn unknown_tags_survive_serde() {
        let tag: EntityTag = serde_json::from_str("\"Widget\"").unwrap();
        assert_eq!(tag, EntityTag::Unknown("Widget".to_string()));
        assert_eq!(serde_json::to_string(&tag).unwrap(), "\"Widget\"");
        let known: EntityTag = serde_json::from_str("\"Timer\"").unwrap();
        assert_eq!(known.known(), Some(EntityType::Timer));
    }
}
