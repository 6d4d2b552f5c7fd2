//! Three-stage benchmark harness: task loading, pipeline execution under a
//! module configuration (Base through full retrieval + KG), metric
//! computation, and report emission.

mod load;
mod metrics;
mod report;
mod run;

pub use load::{load_tasks, CountCheck, LoadOutcome};
pub use metrics::{binary_f1, multilabel_f1, normalize_label, score_evidence, EvidenceMode};
pub use report::{
    ablation_summary, recompute_aggregates, write_report_csv, write_report_json, Aggregates,
    EvalReport, TaskRow,
};
pub use run::{run_ablation, run_eval, run_task, EvalOptions, IndexHandles, PredictionRecord};

use std::collections::BTreeSet;
use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{GatewayError, TransportMode};
use crate::retrieval::{RetrievalConfig, RetrievalError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("task file schema violation at line {line}: {detail}")]
    SchemaViolation { line: usize, detail: String },
    #[error("task counts do not match the official files: {0}")]
    CountMismatch(String),
    #[error("prediction and gold label lists differ in length ({preds} vs {golds})")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("no instances with gold positives to evaluate")]
    NoPositiveInstances,
    #[error("invalid pipeline configuration: {0}")]
    InvalidPipeline(String),
    #[error("stored aggregates disagree with a recount: {0}")]
    AggregateMismatch(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("io error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// Task family. `EXTERNAL-*` covers the verified external datasets; the
/// suffix names the source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Family {
    Eqa,
    Aqa,
    Mcqa,
    EqaE,
    AqaE,
    McqaE,
    Ccqa,
    Tfqa,
    Label,
    Explain,
    External(String),
}

impl Family {
    pub fn as_str(&self) -> String {
        match self {
            Family::Eqa => "EQA".to_string(),
            Family::Aqa => "AQA".to_string(),
            Family::Mcqa => "MCQA".to_string(),
            Family::EqaE => "EQA-E".to_string(),
            Family::AqaE => "AQA-E".to_string(),
            Family::McqaE => "MCQA-E".to_string(),
            Family::Ccqa => "CCQA".to_string(),
            Family::Tfqa => "TFQA".to_string(),
            Family::Label => "LABEL".to_string(),
            Family::Explain => "EXPLAIN".to_string(),
            Family::External(suffix) => format!("EXTERNAL-{suffix}"),
        }
    }

    pub fn is_multiple_choice(&self, options_present: bool) -> bool {
        match self {
            Family::Mcqa | Family::McqaE => true,
            Family::External(_) => options_present,
            _ => false,
        }
    }

    pub fn is_labeling(&self) -> bool {
        matches!(self, Family::Label | Family::Explain)
    }

    /// Whether predictions for this family must cite evidence.
    pub fn requires_evidence(&self, stage: u8) -> bool {
        match self {
            Family::EqaE | Family::AqaE | Family::McqaE | Family::Ccqa | Family::Tfqa => true,
            Family::Label | Family::Explain => true,
            Family::External(_) => stage >= 2,
            Family::Eqa | Family::Aqa | Family::Mcqa => false,
        }
    }
}

impl TryFrom<String> for Family {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        match s.as_str() {
            "EQA" => Ok(Family::Eqa),
            "AQA" => Ok(Family::Aqa),
            "MCQA" => Ok(Family::Mcqa),
            "EQA-E" => Ok(Family::EqaE),
            "AQA-E" => Ok(Family::AqaE),
            "MCQA-E" => Ok(Family::McqaE),
            "CCQA" => Ok(Family::Ccqa),
            "TFQA" => Ok(Family::Tfqa),
            "LABEL" => Ok(Family::Label),
            "EXPLAIN" => Ok(Family::Explain),
            other => match other.strip_prefix("EXTERNAL-") {
                Some(suffix) if !suffix.is_empty() => Ok(Family::External(suffix.to_string())),
                _ => Err(format!("unknown task family {other:?}")),
            },
        }
    }
}

impl From<Family> for String {
    fn from(f: Family) -> Self {
        f.as_str()
    }
}

/// Closed vulnerability category set with an explicit `other` escape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VulnCategory {
    DenialOfService,
    Replay,
    Downgrade,
    PrivacyTracking,
    Spoofing,
    AuthenticationBypass,
    Other,
}

impl VulnCategory {
    pub const ALL: [VulnCategory; 7] = [
        VulnCategory::DenialOfService,
        VulnCategory::Replay,
        VulnCategory::Downgrade,
        VulnCategory::PrivacyTracking,
        VulnCategory::Spoofing,
        VulnCategory::AuthenticationBypass,
        VulnCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VulnCategory::DenialOfService => "denial_of_service",
            VulnCategory::Replay => "replay",
            VulnCategory::Downgrade => "downgrade",
            VulnCategory::PrivacyTracking => "privacy_tracking",
            VulnCategory::Spoofing => "spoofing",
            VulnCategory::AuthenticationBypass => "authentication_bypass",
            VulnCategory::Other => "other",
        }
    }

    /// Tolerant parse for model replies; anything unrecognized maps to
    /// `Other`, empty markers map to nothing.
    pub fn parse_loose(raw: &str) -> Option<VulnCategory> {
        let token: String = raw
            .trim()
            .to_lowercase()
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { '_' })
            .collect();
        let token = token.trim_matches('_');
        if token.is_empty() || token == "none" {
            return None;
        }
        Some(match token {
            "denial_of_service" | "dos" | "denial" => VulnCategory::DenialOfService,
            "replay" => VulnCategory::Replay,
            "downgrade" | "bidding_down" => VulnCategory::Downgrade,
            "privacy_tracking" | "privacy" | "tracking" | "privacy_leak" => {
                VulnCategory::PrivacyTracking
            }
            "spoofing" | "spoof" => VulnCategory::Spoofing,
            "authentication_bypass" | "auth_bypass" => VulnCategory::AuthenticationBypass,
            _ => VulnCategory::Other,
        })
    }
}

/// One benchmark item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub task_id: String,
    pub stage: u8,
    pub family: Family,
    #[serde(default)]
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_answer: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub gold_evidence: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_binary: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_categories: Option<BTreeSet<VulnCategory>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence: Option<String>,
}

impl TaskInstance {
    /// The text retrieval runs over: the normative sentence for labeling
    /// tasks, the question otherwise.
    pub fn query_text(&self) -> &str {
        match (&self.family, &self.sentence) {
            (Family::Label | Family::Explain, Some(sentence)) => sentence,
            _ => &self.question,
        }
    }

    /// Option key (`A`..) for a 0-based option index.
    pub fn option_key(index: usize) -> char {
        (b'A' + index as u8) as char
    }
}

/// Module configuration for one evaluation run. `use_kg` requires
/// `use_rag`: KG blocks ride the retrieval context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub use_fusion: bool,
    pub use_rag: bool,
    pub use_kg: bool,
    pub retrieval: RetrievalConfig,
    pub transport: TransportMode,
}

impl PipelineConfig {
    pub fn base(transport: TransportMode) -> Self {
        Self {
            use_fusion: false,
            use_rag: false,
            use_kg: false,
            retrieval: RetrievalConfig::default(),
            transport,
        }
    }

    pub fn full(transport: TransportMode) -> Self {
        Self {
            use_fusion: true,
            use_rag: true,
            use_kg: true,
            retrieval: RetrievalConfig::default(),
            transport,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.use_kg && !self.use_rag {
            return Err(BenchError::InvalidPipeline(
                "use_kg requires use_rag (KG blocks ride the retrieval context)".to_string(),
            ));
        }
        self.retrieval.validate()?;
        Ok(())
    }
}
