//! Chunking of clause bodies into sentence- or paragraph-level text
//! components.
//!
//! Chunk spans are byte offsets into the clause body, trimmed to their
//! non-whitespace extent, so the spans of a clause tile its body: disjoint,
//! ordered, and jointly covering every non-whitespace byte.

use serde::{Deserialize, Serialize};

use super::{Clause, ComponentKind, SpecComponent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Sentence,
    Paragraph,
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sentence" => Ok(Granularity::Sentence),
            "paragraph" => Ok(Granularity::Paragraph),
            other => Err(format!("unknown granularity {other:?}")),
        }
    }
}

/// Chunk a clause body into text components carrying the clause id and a
/// byte span. An empty body yields no chunks.
pub fn chunk_clause(
    clause: &Clause,
    granularity: Granularity,
    spec_id: &str,
) -> Vec<SpecComponent> {
    let spans = match granularity {
        Granularity::Paragraph => paragraph_spans(&clause.body_text),
        Granularity::Sentence => sentence_spans(&clause.body_text),
    };
    spans
        .into_iter()
        .enumerate()
        .map(|(seq, (start, end))| SpecComponent {
            component_id: format!("{spec_id}/{}/text/{seq}", clause.clause_id),
            kind: ComponentKind::Text,
            spec_id: spec_id.to_string(),
            clause_id: clause.clause_id.clone(),
            label: None,
            content: clause.body_text[start..end].to_string(),
            source_char_span: (start, end),
        })
        .collect()
}

/// Paragraph spans: maximal runs separated by blank lines.
pub fn paragraph_spans(body: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut offset = 0usize;
    for line in body.split_inclusive('\n') {
        let is_blank = line.trim().is_empty();
        if is_blank {
            if let Some(s) = start.take() {
                spans.push(trim_span(body, s, offset));
            }
        } else if start.is_none() {
            start = Some(offset);
        }
        offset += line.len();
    }
    if let Some(s) = start {
        spans.push(trim_span(body, s, body.len()));
    }
    spans.retain(|(s, e)| s < e);
    spans
}

const PROTECTED_ABBREVIATIONS: &[&str] = &["e.g", "i.e", "etc", "cf", "vs", "fig", "no", "al"];

/// Sentence spans. A `.`, `!`, or `?` ends a sentence only when followed by
/// whitespace; a period between digits (a dotted clause reference such as
/// `5.5.1`) or closing a protected abbreviation never splits.
pub fn sentence_spans(body: &str) -> Vec<(usize, usize)> {
    let bytes = body.as_bytes();
    let mut spans = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'.' || b == b'!' || b == b'?' {
            let next = bytes.get(i + 1).copied();
            let splits = match next {
                None => true,
                Some(n) if n.is_ascii_whitespace() => !(b == b'.' && is_protected_period(body, i)),
                _ => false,
            };
            if splits {
                let span = trim_span(body, start, i + 1);
                if span.0 < span.1 {
                    spans.push(span);
                }
                start = i + 1;
            }
        }
        i += 1;
    }
    let tail = trim_span(body, start, body.len());
    if tail.0 < tail.1 {
        spans.push(tail);
    }
    spans
}

/// Count of sentences in `text` (used for corpus statistics).
pub fn sentence_count(text: &str) -> usize {
    sentence_spans(text).len()
}

fn is_protected_period(body: &str, dot: usize) -> bool {
    let bytes = body.as_bytes();
    let prev_digit = dot > 0 && bytes[dot - 1].is_ascii_digit();
    let next_digit = bytes.get(dot + 1).is_some_and(|b| b.is_ascii_digit());
    if prev_digit && next_digit {
        return true;
    }
    // Walk back over the token (letters and interior dots) ending here.
    let mut start = dot;
    while start > 0 {
        let c = bytes[start - 1];
        if c.is_ascii_alphabetic() || c == b'.' {
            start -= 1;
        } else {
            break;
        }
    }
    let token = body[start..dot].to_lowercase();
    PROTECTED_ABBREVIATIONS.contains(&token.as_str())
}

fn trim_span(body: &str, start: usize, end: usize) -> (usize, usize) {
    let slice = &body[start..end];
    let trimmed_start = start + (slice.len() - slice.trim_start().len());
    let trimmed_end = end - (slice.len() - slice.trim_end().len());
    if trimmed_start >= trimmed_end {
        (start, start)
    } else {
        (trimmed_start, trimmed_end)
    }
}
