//! Blinded three-level judge protocol.

use crate::prompts::fill;

use super::{Gateway, GatewayError, JudgeVerdict};

impl Gateway {
    /// Grade `candidate` against `gold` on the 0/1/2 rubric.
    ///
    /// The prompt is blinded: it carries the question, the candidate, the
    /// gold answer, and optionally the gold evidence, but never any text
    /// identifying which system produced the candidate. One decoding at
    /// temperature 0.
    pub fn judge(
        &self,
        question: &str,
        candidate: &str,
        gold: &str,
        gold_evidence: Option<&str>,
    ) -> Result<JudgeVerdict, GatewayError> {
        if gold.trim().is_empty() {
            return Err(GatewayError::EmptyGoldAnswer);
        }
        let prompt = self.build_judge_prompt(question, candidate, gold, gold_evidence);
        let response = self.complete(&self.request("", &prompt))?;
        parse_verdict(&response)
    }

    pub fn build_judge_prompt(
        &self,
        question: &str,
        candidate: &str,
        gold: &str,
        gold_evidence: Option<&str>,
    ) -> String {
        let evidence_section = match gold_evidence {
            Some(evidence) if !evidence.trim().is_empty() => {
                format!("\nGold evidence:\n{}\n", evidence.trim())
            }
            _ => String::new(),
        };
        fill(
            &self.prompts().judge,
            &[
                ("question", question),
                ("candidate", candidate),
                ("gold", gold),
                ("evidence_section", &evidence_section),
            ],
        )
    }
}

/// Accepts the first standalone 0/1/2 token after a `SCORE` marker, so
/// verbose judges still parse.
pub fn parse_verdict(response: &str) -> Result<JudgeVerdict, GatewayError> {
    let at = response
        .find("SCORE")
        .ok_or_else(|| GatewayError::UnparseableVerdict(clip(response)))?;
    let tail = &response[at + "SCORE".len()..];
    for (idx, token) in tokenize_with_offsets(tail) {
        match token {
            "0" | "1" | "2" => {
                let score: u8 = token.parse().unwrap();
                let rationale = tail[idx + token.len()..].trim().to_string();
                return Ok(JudgeVerdict { score, rationale });
            }
            _ => continue,
        }
    }
    Err(GatewayError::UnparseableVerdict(clip(response)))
}

fn tokenize_with_offsets(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split_inclusive(|c: char| !c.is_alphanumeric())
        .scan(0usize, |offset, piece| {
            let start = *offset;
            *offset += piece.len();
            let token = piece.trim_end_matches(|c: char| !c.is_alphanumeric());
            Some((start, token))
        })
        .filter(|(_, token)| !token.is_empty())
}

fn clip(text: &str) -> String {
    let mut owned = text.trim().to_string();
    if owned.len() > 200 {
        owned.truncate(200);
        owned.push_str("...");
    }
    owned
}
