//! Structural validation of clause graphs. Violations are data, not
//! exceptions: a valid graph yields an empty violation list.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::retrieval::parse_citation;

use super::{EntityTag, RelationTag, RelationType, SpecGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// Entity or relation tag outside the closed vocabularies.
    VocabularyViolation,
    /// Node or edge without provenance.
    MissingProvenance,
    /// Provenance that does not parse as a citation label.
    MalformedProvenance,
    /// Edge endpoint that names no node.
    DanglingEndpoint,
    /// `state_transition` between identical states.
    StateTransitionSelfLoop,
    DuplicateNodeId,
    DuplicateName,
    EmptyName,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Node id or `source -relation-> target` description of the subject.
    pub subject: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        write!(f, "{} violation(s):", self.violations.len())?;
        for v in &self.violations {
            write!(f, " [{:?} at {}: {}]", v.kind, v.subject, v.detail)?;
        }
        Ok(())
    }
}

/// Check every structural invariant of a graph.
pub fn validate_graph(graph: &SpecGraph) -> ValidationReport {
    let mut violations = Vec::new();
    let mut node_ids: HashSet<&str> = HashSet::new();
    let mut names: HashSet<&str> = HashSet::new();

    for node in &graph.nodes {
        if !node_ids.insert(&node.node_id) {
            violations.push(Violation {
                kind: ViolationKind::DuplicateNodeId,
                subject: node.node_id.clone(),
                detail: "node id appears more than once".to_string(),
            });
        }
        if node.name.trim().is_empty() {
            violations.push(Violation {
                kind: ViolationKind::EmptyName,
                subject: node.node_id.clone(),
                detail: "node has an empty name".to_string(),
            });
        } else if !names.insert(&node.name) {
            violations.push(Violation {
                kind: ViolationKind::DuplicateName,
                subject: node.node_id.clone(),
                detail: format!("name {:?} appears more than once", node.name),
            });
        }
        if let EntityTag::Unknown(tag) = &node.entity_type {
            violations.push(Violation {
                kind: ViolationKind::VocabularyViolation,
                subject: node.node_id.clone(),
                detail: format!("unknown entity type {tag:?}"),
            });
        }
        check_provenance(&node.provenance, &node.node_id, &mut violations);
    }

    for edge in &graph.edges {
        let subject = format!(
            "{} -{}-> {}",
            edge.source,
            edge.relation_type.as_str(),
            edge.target
        );
        if let RelationTag::Unknown(tag) = &edge.relation_type {
            violations.push(Violation {
                kind: ViolationKind::VocabularyViolation,
                subject: subject.clone(),
                detail: format!("unknown relation type {tag:?}"),
            });
        }
        for (which, endpoint) in [("source", &edge.source), ("target", &edge.target)] {
            if !node_ids.contains(endpoint.as_str()) {
                violations.push(Violation {
                    kind: ViolationKind::DanglingEndpoint,
                    subject: subject.clone(),
                    detail: format!("{which} {endpoint:?} names no node"),
                });
            }
        }
        if edge.relation_type.known() == Some(RelationType::StateTransition)
            && edge.source == edge.target
        {
            violations.push(Violation {
                kind: ViolationKind::StateTransitionSelfLoop,
                subject: subject.clone(),
                detail: "state_transition between identical states".to_string(),
            });
        }
        check_provenance(&edge.provenance, &subject, &mut violations);
    }

    ValidationReport { violations }
}

fn check_provenance(provenance: &str, subject: &str, violations: &mut Vec<Violation>) {
    if provenance.trim().is_empty() {
        violations.push(Violation {
            kind: ViolationKind::MissingProvenance,
            subject: subject.to_string(),
            detail: "provenance is empty".to_string(),
        });
    } else if parse_citation(provenance).is_none() {
        violations.push(Violation {
            kind: ViolationKind::MalformedProvenance,
            subject: subject.to_string(),
            detail: format!("provenance {provenance:?} is not a citation label"),
        });
    }
}
