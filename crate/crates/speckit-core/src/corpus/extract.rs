//! Structured table and figure extraction through the gateway.
//!
//! Extraction output must be a JSON object with keys `identifier`,
//! `caption`, and `description`, plus `rows` for tables or `elements` and
//! `flows` for figures. A schema-invalid reply gets one repair retry with a
//! corrective instruction appended, then the operation fails.

use std::sync::OnceLock;

use regex::Regex;
use serde_json::Value;

use crate::gateway::Gateway;
use crate::prompts::fill;

use super::{ComponentKind, CorpusError, SpecComponent};

/// Where an extracted component attaches.
#[derive(Debug, Clone)]
pub struct RegionProvenance {
    pub spec_id: String,
    pub clause_id: String,
    /// Sequence number within (spec, clause, kind).
    pub seq: usize,
}

fn identifier_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:Table|Figure)\s+[0-9][0-9A-Za-z.\-]*").unwrap())
}

/// Extract one table or figure region into a structured component.
pub fn extract_structured_description(
    region: &str,
    kind: ComponentKind,
    provenance: &RegionProvenance,
    gateway: &Gateway,
) -> Result<SpecComponent, CorpusError> {
    let template = match kind {
        ComponentKind::Table => &gateway.prompts().table_extraction,
        ComponentKind::Figure => &gateway.prompts().figure_extraction,
        ComponentKind::Text => {
            return Err(CorpusError::ModelOutputSchemaViolation(
                "text components are chunked, not extracted".to_string(),
            ))
        }
    };
    let prompt = fill(template, &[("region", region)]);
    let mut object = complete_json_with_repair(gateway, &prompt, |value| {
        validate_extraction_schema(value, kind)
    })?;

    // The printed identifier wins over whatever the model proposed; when the
    // region has none, keep the model's and flag its origin.
    let detected = identifier_re().find(region).map(|m| m.as_str().to_string());
    match &detected {
        Some(identifier) => {
            object["identifier"] = Value::String(identifier.clone());
            if let Some(map) = object.as_object_mut() {
                map.remove("identifier_source");
            }
        }
        None => {
            object["identifier_source"] = Value::String("model".to_string());
        }
    }
    let label = object["identifier"]
        .as_str()
        .unwrap_or_default()
        .to_string();

    Ok(SpecComponent {
        component_id: format!(
            "{}/{}/{}/{}",
            provenance.spec_id, provenance.clause_id, kind, provenance.seq
        ),
        kind,
        spec_id: provenance.spec_id.clone(),
        clause_id: provenance.clause_id.clone(),
        label: Some(label),
        content: object.to_string(),
        source_char_span: (0, 0),
    })
}

/// Identification pass: list the table/figure identifiers present in a
/// clause.
pub fn identify_components(
    clause_content: &str,
    gateway: &Gateway,
) -> Result<Vec<String>, CorpusError> {
    let prompt = fill(
        &gateway.prompts().identification,
        &[("clause", clause_content)],
    );
    let object = complete_json_with_repair(gateway, &prompt, |value| {
        let ids = value
            .get("identifiers")
            .and_then(Value::as_array)
            .ok_or_else(|| "missing \"identifiers\" array".to_string())?;
        if ids.iter().all(Value::is_string) {
            Ok(())
        } else {
            Err("non-string entries in \"identifiers\"".to_string())
        }
    })?;
    Ok(object["identifiers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect())
}

/// Run one completion expecting a JSON object; on schema failure, retry once
/// with a corrective instruction, then fail.
pub(crate) fn complete_json_with_repair(
    gateway: &Gateway,
    prompt: &str,
    validate: impl Fn(&Value) -> Result<(), String>,
) -> Result<Value, CorpusError> {
    let mut last_error = String::new();
    for attempt in 0..2 {
        let effective_prompt = if attempt == 0 {
            prompt.to_string()
        } else {
            format!(
                "{prompt}\n\nYour previous reply was rejected: {last_error}. \
                 Reply with only the required JSON object."
            )
        };
        let response = gateway.complete(&gateway.request("", &effective_prompt))?;
        match parse_json_object(&response) {
            Ok(value) => match validate(&value) {
                Ok(()) => return Ok(value),
                Err(detail) => last_error = detail,
            },
            Err(detail) => last_error = detail,
        }
    }
    Err(CorpusError::ModelOutputSchemaViolation(last_error))
}

fn parse_json_object(response: &str) -> Result<Value, String> {
    let start = response.find('{').ok_or("reply contains no JSON object")?;
    let end = response.rfind('}').ok_or("reply contains no JSON object")?;
    if end < start {
        return Err("reply contains no JSON object".to_string());
    }
    let value: Value = serde_json::from_str(&response[start..=end])
        .map_err(|err| format!("invalid JSON: {err}"))?;
    if value.is_object() {
        Ok(value)
    } else {
        Err("top-level JSON value is not an object".to_string())
    }
}

fn validate_extraction_schema(value: &Value, kind: ComponentKind) -> Result<(), String> {
    for key in ["identifier", "caption", "description"] {
        if !value.get(key).is_some_and(Value::is_string) {
            return Err(format!("missing string key {key:?}"));
        }
    }
    match kind {
        ComponentKind::Table => {
            if !value.get("rows").is_some_and(Value::is_array) {
                return Err("missing array key \"rows\"".to_string());
            }
        }
        ComponentKind::Figure => {
            for key in ["elements", "flows"] {
                if !value.get(key).is_some_and(Value::is_array) {
                    return Err(format!("missing array key {key:?}"));
                }
            }
        }
        ComponentKind::Text => {}
    }
    Ok(())
}
