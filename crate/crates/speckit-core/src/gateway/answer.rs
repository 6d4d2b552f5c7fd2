//! Context-grounded answering with citation parsing.

use serde::{Deserialize, Serialize};

use crate::prompts::fill;

use super::{Gateway, GatewayError};

/// One retrieved passage supplied to the model as grounding context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextPassage {
    pub label: String,
    pub content: String,
}

impl Gateway {
    /// Answer `question` grounded in `context` only.
    ///
    /// With `require_evidence` the prompt demands a trailing `CITATIONS:`
    /// line whose labels are parsed and returned; a missing line yields an
    /// empty citation list, not an error.
    pub fn answer_with_context(
        &self,
        question: &str,
        context: &[ContextPassage],
        require_evidence: bool,
    ) -> Result<(String, Vec<String>), GatewayError> {
        let prompt = self.build_answer_prompt(question, context, require_evidence);
        let response = self.complete(&self.request("", &prompt))?;
        Ok(split_citations(&response))
    }

    pub fn build_answer_prompt(
        &self,
        question: &str,
        context: &[ContextPassage],
        require_evidence: bool,
    ) -> String {
        let citation_instruction = if require_evidence {
            format!("\n{}\n", self.prompts().citation_instruction)
        } else {
            String::new()
        };
        fill(
            &self.prompts().answer,
            &[
                ("citation_instruction", citation_instruction.as_str()),
                ("context", &render_context(context)),
                ("question", question),
            ],
        )
    }
}

/// Render context passages as numbered, labeled blocks.
pub fn render_context(context: &[ContextPassage]) -> String {
    if context.is_empty() {
        return "(none)".to_string();
    }
    let blocks: Vec<String> = context
        .iter()
        .enumerate()
        .map(|(i, passage)| format!("[{}] {}\n{}", i + 1, passage.label, passage.content))
        .collect();
    blocks.join("\n\n")
}

/// Split a model reply into (answer, cited labels). Labels come from the
/// last `CITATIONS:` line, semicolon-separated; `NONE` means no citations.
pub fn split_citations(response: &str) -> (String, Vec<String>) {
    let mut answer_lines: Vec<&str> = Vec::new();
    let mut citations: Vec<String> = Vec::new();
    for line in response.lines() {
        if let Some(rest) = line.trim().strip_prefix("CITATIONS:") {
            citations = rest
                .split(';')
                .map(str::trim)
                .filter(|label| !label.is_empty() && !label.eq_ignore_ascii_case("none"))
                .map(str::to_string)
                .collect();
        } else {
            answer_lines.push(line);
        }
    }
    let answer = answer_lines.join("\n").trim().to_string();
    (answer, citations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn passages() -> Vec<ContextPassage> {
        vec![
            ContextPassage {
                label: "TS 24.501, Clause 5.5.1".to_string(),
                content: "The UE initiates registration.".to_string(),
            },
            ContextPassage {
                label: "TS 24.501, Clause 5.4.2".to_string(),
                content: "The AMF initiates security mode control.".to_string(),
            },
        ]
    }

    #[test]
    fn mock_answer_cites_the_supplied_labels() {
        let gw = Gateway::mock();
        let (answer, citations) = gw
            .answer_with_context("When is NAS integrity established?", &passages(), true)
            .unwrap();
        assert!(!answer.is_empty());
        assert_eq!(
            citations,
            vec!["TS 24.501, Clause 5.5.1", "TS 24.501, Clause 5.4.2"]
        );
    }

    #[test]
    fn empty_context_yields_empty_citations() {
        let gw = Gateway::mock();
        let (_, citations) = gw.answer_with_context("Anything?", &[], true).unwrap();
        assert!(citations.is_empty());
    }

    #[test]
    fn missing_citation_line_is_not_an_error() {
        let (answer, citations) = split_citations("Just an answer.");
        assert_eq!(answer, "Just an answer.");
        assert!(citations.is_empty());
    }

    #[test]
    fn citation_line_none_is_empty() {
        let (_, citations) = split_citations("Answer.\nCITATIONS: NONE");
        assert!(citations.is_empty());
    }
}
