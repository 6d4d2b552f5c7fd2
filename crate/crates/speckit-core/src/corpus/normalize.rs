//! Text normalization: decoding, control-character removal, header/footer
//! stripping, hyphenation repair, and whitespace collapsing.

use regex::Regex;

use super::{segment::segment_clauses, CorpusError, NormalizedDocument};

/// Normalization knobs. Header/footer stripping is a configurable regex
/// list because page furniture varies between renditions.
#[derive(Debug, Clone)]
pub struct NormalizeConfig {
    /// Accept invalid UTF-8 with lossy replacement instead of erroring.
    pub lossy_decode: bool,
    /// Full-line patterns removed before segmentation.
    pub strip_patterns: Vec<String>,
    /// Release tag override; detected from the raw text when empty.
    pub release: String,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        Self {
            lossy_decode: false,
            strip_patterns: vec![
                r"^3GPP TS .*$".to_string(),
                r"^ETSI\s*$".to_string(),
                r"^\s*\d+\s*$".to_string(), // bare page numbers
            ],
            release: String::new(),
        }
    }
}

/// Normalize a raw byte stream into a segmented document.
///
/// Whitespace runs collapse to single spaces, blank-line paragraph breaks
/// survive, line-break hyphenation is repaired, and configured page
/// furniture is stripped. The result segments into the clause tree.
pub fn normalize_document(
    raw: &[u8],
    spec_id: &str,
    cfg: &NormalizeConfig,
) -> Result<NormalizedDocument, CorpusError> {
    if spec_id.is_empty() {
        return Err(CorpusError::InvalidSpecId(
            spec_id.to_string(),
            "must be non-empty",
        ));
    }
    if spec_id.contains('/') {
        return Err(CorpusError::InvalidSpecId(
            spec_id.to_string(),
            "must not contain '/'",
        ));
    }

    let decoded: String = match std::str::from_utf8(raw) {
        Ok(text) => text.to_string(),
        Err(_) if cfg.lossy_decode => String::from_utf8_lossy(raw).into_owned(),
        Err(_) => return Err(CorpusError::UndecodableInput),
    };

    let release = if cfg.release.is_empty() {
        detect_release(&decoded)
    } else {
        cfg.release.clone()
    };

    let text = normalize_text(&decoded, cfg);
    if text.trim().is_empty() {
        return Err(CorpusError::EmptyDocument(spec_id.to_string()));
    }

    Ok(NormalizedDocument {
        spec_id: spec_id.to_string(),
        release,
        clauses: segment_clauses(&text),
    })
}

/// The pure text half of normalization; applying it twice equals applying
/// it once.
pub fn normalize_text(input: &str, cfg: &NormalizeConfig) -> String {
    let unified = input.replace("\r\n", "\n").replace('\r', "\n");

    // Drop control characters other than newline; tabs become spaces.
    let cleaned: String = unified
        .chars()
        .map(|c| if c == '\t' { ' ' } else { c })
        .filter(|c| *c == '\n' || !c.is_control())
        .collect();

    let patterns: Vec<Regex> = cfg
        .strip_patterns
        .iter()
        .filter_map(|p| Regex::new(p).ok())
        .collect();
    let kept: Vec<&str> = cleaned
        .lines()
        .filter(|line| !patterns.iter().any(|re| re.is_match(line)))
        .collect();

    let dehyphenated = repair_hyphenation(&kept);

    let mut lines: Vec<String> = dehyphenated
        .iter()
        .map(|line| collapse_spaces(line))
        .collect();

    // Collapse runs of blank lines to a single paragraph break and trim
    // blank lines at both ends.
    let mut out: Vec<String> = Vec::with_capacity(lines.len());
    let mut blank_pending = false;
    for line in lines.drain(..) {
        if line.is_empty() {
            blank_pending = !out.is_empty();
        } else {
            if blank_pending {
                out.push(String::new());
                blank_pending = false;
            }
            out.push(line);
        }
    }
    out.join("\n")
}

/// Join a line ending in `-` with a following line that starts lowercase:
/// `de-\nregistration` reads back as `de-registration` in the source, so
/// only the break is removed, not legitimate hyphens.
fn repair_hyphenation(lines: &[&str]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(lines.len());
    let mut i = 0;
    while i < lines.len() {
        let mut current = lines[i].trim_end().to_string();
        while current.ends_with('-')
            && current
                .chars()
                .rev()
                .nth(1)
                .is_some_and(|c| c.is_alphanumeric())
            && i + 1 < lines.len()
            && lines[i + 1]
                .trim_start()
                .chars()
                .next()
                .is_some_and(|c| c.is_lowercase())
        {
            current.push_str(lines[i + 1].trim_start());
            current = current.trim_end().to_string();
            i += 1;
        }
        out.push(current);
        i += 1;
    }
    out
}

fn collapse_spaces(line: &str) -> String {
    line.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn detect_release(text: &str) -> String {
    let re = Regex::new(r"Release\s+(\d+)").unwrap();
    re.captures(text)
        .map(|c| c[1].to_string())
        .unwrap_or_default()
}
