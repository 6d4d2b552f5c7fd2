//! Clause segmentation over normalized text.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;

use super::Clause;

/// Synthetic clause id holding any text before the first heading.
pub const PREAMBLE_CLAUSE_ID: &str = "0";

fn heading_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // A heading line is a clause id, optionally followed by a title.
    RE.get_or_init(|| Regex::new(r"^(\d+(?:\.\d+)*[a-z]?)(?:[ \t]+(\S.*))?$").unwrap())
}

/// Segment normalized text into clauses in document order.
///
/// Every non-heading character lands in exactly one clause body. Text
/// before the first heading goes to the synthetic clause `0`; a document
/// with no headings yields only that clause. A heading that repeats an id
/// already seen is kept as body text, so ids stay unique.
pub fn segment_clauses(text: &str) -> Vec<Clause> {
    let mut clauses: Vec<Clause> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut current: Option<(String, String, Vec<String>)> = None;

    let flush = |state: &mut Option<(String, String, Vec<String>)>, clauses: &mut Vec<Clause>| {
        if let Some((clause_id, title, body)) = state.take() {
            let body_text = body.join("\n").trim().to_string();
            clauses.push(Clause {
                clause_id,
                title,
                body_text,
                table_regions: Vec::new(),
                figure_regions: Vec::new(),
            });
        }
    };

    for line in text.lines() {
        let heading = heading_re().captures(line.trim_end()).and_then(|cap| {
            let id = cap[1].to_string();
            if seen.contains(&id) {
                None
            } else {
                let title = cap
                    .get(2)
                    .map(|m| m.as_str().to_string())
                    .unwrap_or_default();
                Some((id, title))
            }
        });
        match heading {
            Some((id, title)) => {
                flush(&mut current, &mut clauses);
                seen.insert(id.clone());
                current = Some((id, title, Vec::new()));
            }
            None => match current.as_mut() {
                Some((_, _, body)) => body.push(line.to_string()),
                None => {
                    seen.insert(PREAMBLE_CLAUSE_ID.to_string());
                    current = Some((
                        PREAMBLE_CLAUSE_ID.to_string(),
                        String::new(),
                        vec![line.to_string()],
                    ));
                }
            },
        }
    }
    flush(&mut current, &mut clauses);

    if clauses.is_empty() {
        clauses.push(Clause {
            clause_id: PREAMBLE_CLAUSE_ID.to_string(),
            title: String::new(),
            body_text: String::new(),
            table_regions: Vec::new(),
            figure_regions: Vec::new(),
        });
    }
    clauses
}
