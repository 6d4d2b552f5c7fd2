//! Citation labels.
//!
//! Canonical forms: `TS 24.501, Clause 5.5.1` for text chunks, with
//! `, Table <id>` or `, Figure <id>` appended for table and figure
//! components (the label already carries the `Table`/`Figure` word).

use crate::corpus::{ComponentKind, SpecComponent};

/// Structured form of a citation label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationParts {
    pub spec_id: String,
    pub clause_id: String,
    /// `Table <id>` / `Figure <id>` when the citation points at one.
    pub unit_label: Option<String>,
}

impl CitationParts {
    pub fn render(&self) -> String {
        match &self.unit_label {
            Some(unit) => format!("{}, Clause {}, {}", self.spec_id, self.clause_id, unit),
            None => format!("{}, Clause {}", self.spec_id, self.clause_id),
        }
    }
}

/// Render the canonical citation label for a component.
pub fn render_citation(component: &SpecComponent) -> String {
    let parts = CitationParts {
        spec_id: component.spec_id.clone(),
        clause_id: component.clause_id.clone(),
        unit_label: match component.kind {
            ComponentKind::Text => None,
            ComponentKind::Table | ComponentKind::Figure => component.label.clone(),
        },
    };
    parts.render()
}

/// Parse a canonical citation label back into its parts.
pub fn parse_citation(label: &str) -> Option<CitationParts> {
    let mut pieces = label.split(", ");
    let spec_id = pieces.next()?.trim();
    let clause_piece = pieces.next()?.trim();
    let clause_id = clause_piece.strip_prefix("Clause ")?.trim();
    if spec_id.is_empty() || clause_id.is_empty() {
        return None;
    }
    let unit_label = pieces.next().map(|p| p.trim().to_string());
    if pieces.next().is_some() {
        return None;
    }
    if let Some(unit) = &unit_label {
        if !unit.starts_with("Table ") && !unit.starts_with("Figure ") {
            return None;
        }
    }
    Some(CitationParts {
        spec_id: spec_id.to_string(),
        clause_id: clause_id.to_string(),
        unit_label,
    })
}
