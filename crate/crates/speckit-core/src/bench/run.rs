//! Task execution under a pipeline configuration, and the top-k ablation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::gateway::{render_context, split_citations, ContextPassage, Gateway};
use crate::prompts::fill;
use crate::retrieval::HybridIndex;
use crate::specgraph::merge_context;

use super::metrics::{score_evidence, EvidenceMode};
use super::report::{build_report, EvalReport};
use super::{BenchError, PipelineConfig, TaskInstance, VulnCategory};

/// Indexes the runner retrieves from. `chunk_index` serves raw chunks,
/// `kg_index` serves rendered KG blocks.
#[derive(Default)]
pub struct IndexHandles {
    pub chunk_index: Option<HybridIndex>,
    pub kg_index: Option<HybridIndex>,
}

impl IndexHandles {
    pub fn none() -> Self {
        Self::default()
    }

    /// Total retrieve() calls served by both indexes.
    pub fn query_count(&self) -> u64 {
        self.chunk_index.as_ref().map_or(0, |i| i.query_count())
            + self.kg_index.as_ref().map_or(0, |i| i.query_count())
    }
}

/// Scoring options independent of the pipeline wiring.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub evidence_mode: EvidenceMode,
}

/// Everything one task run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub task_id: String,
    pub answer: Option<String>,
    pub citations: Vec<String>,
    pub pred_binary: Option<bool>,
    pub pred_categories: BTreeSet<VulnCategory>,
    pub explanation: Option<String>,
    /// retrieve() calls issued for this task.
    pub retrieval_calls: u64,
    pub error: Option<String>,
}

impl PredictionRecord {
    fn empty(task_id: &str) -> Self {
        Self {
            task_id: task_id.to_string(),
            answer: None,
            citations: Vec::new(),
            pred_binary: None,
            pred_categories: BTreeSet::new(),
            explanation: None,
            retrieval_calls: 0,
            error: None,
        }
    }
}

/// Run one task through the configured pipeline. Gateway failures are
/// recorded on the prediction, not raised: a single bad task must not kill
/// a run.
pub fn run_task(
    task: &TaskInstance,
    config: &PipelineConfig,
    handles: &IndexHandles,
    gateway: &Gateway,
) -> PredictionRecord {
    let mut record = PredictionRecord::empty(&task.task_id);

    let context = match gather_context(task, config, handles, &mut record) {
        Ok(context) => context,
        Err(err) => {
            record.error = Some(err.to_string());
            return record;
        }
    };

    let outcome = if task
        .family
        .is_multiple_choice(task.options.as_ref().is_some_and(|o| !o.is_empty()))
    {
        run_multiple_choice(task, &context, gateway, &mut record)
    } else if task.family.is_labeling() {
        run_labeling(task, &context, gateway, &mut record)
    } else {
        run_open(task, &context, gateway, &mut record)
    };
    if let Err(err) = outcome {
        record.error = Some(err.to_string());
    }
    record
}

fn gather_context(
    task: &TaskInstance,
    config: &PipelineConfig,
    handles: &IndexHandles,
    record: &mut PredictionRecord,
) -> Result<Vec<ContextPassage>, BenchError> {
    if !config.use_rag {
        // Base configuration: empty context, zero retrieval calls.
        return Ok(Vec::new());
    }
    let Some(chunk_index) = handles.chunk_index.as_ref() else {
        return Err(BenchError::InvalidPipeline(
            "use_rag is set but no chunk index was supplied".to_string(),
        ));
    };
    let query = task.query_text();
    let k = config.retrieval.k;
    let alpha = config.retrieval.alpha;

    let chunk_evidence = chunk_index.retrieve_with(query, k, alpha)?;
    record.retrieval_calls += 1;

    let items = if config.use_kg {
        let Some(kg_index) = handles.kg_index.as_ref() else {
            return Err(BenchError::InvalidPipeline(
                "use_kg is set but no kg index was supplied".to_string(),
            ));
        };
        // The query-time budget applies to both evidence sources.
        let kg_evidence = kg_index.retrieve_with(query, k, alpha)?;
        record.retrieval_calls += 1;
        merge_context(&chunk_evidence, &kg_evidence, k)
    } else {
        chunk_evidence
            .items
            .iter()
            .map(|item| crate::specgraph::ContextItem {
                label: item.label.clone(),
                content: item.content.clone(),
                fused: item.score.fused,
                component_id: item.component_id.clone(),
            })
            .collect()
    };

    Ok(items
        .into_iter()
        .map(|item| ContextPassage {
            label: item.label,
            content: item.content,
        })
        .collect())
}

fn context_section(context: &[ContextPassage]) -> String {
    if context.is_empty() {
        String::new()
    } else {
        format!("Context passages:\n{}\n\n", render_context(context))
    }
}

fn run_open(
    task: &TaskInstance,
    context: &[ContextPassage],
    gateway: &Gateway,
    record: &mut PredictionRecord,
) -> Result<(), BenchError> {
    let require_evidence = task.family.requires_evidence(task.stage);
    let (answer, citations) =
        gateway.answer_with_context(&task.question, context, require_evidence)?;
    record.answer = Some(answer);
    record.citations = citations;
    Ok(())
}

fn run_multiple_choice(
    task: &TaskInstance,
    context: &[ContextPassage],
    gateway: &Gateway,
    record: &mut PredictionRecord,
) -> Result<(), BenchError> {
    let options = task.options.as_deref().unwrap_or(&[]);
    let options_block: Vec<String> = options
        .iter()
        .enumerate()
        .map(|(i, text)| format!("{}. {}", TaskInstance::option_key(i), text))
        .collect();
    let citation_instruction = if task.family.requires_evidence(task.stage) {
        format!("\n{}\n", gateway.prompts().citation_instruction)
    } else {
        String::new()
    };
    let prompt = fill(
        &gateway.prompts().multiple_choice,
        &[
            ("citation_instruction", citation_instruction.as_str()),
            ("context_section", &context_section(context)),
            ("question", &task.question),
            ("options", &options_block.join("\n")),
        ],
    );
    let response = gateway.complete(&gateway.request("", &prompt))?;
    let (body, citations) = split_citations(&response);
    record.citations = citations;
    record.answer = first_option_key(&body, options.len());
    if record.answer.is_none() {
        record.error = Some(format!("no option key found in reply {body:?}"));
    }
    Ok(())
}

/// First standalone option key (A-E range, within the option count) in the
/// reply.
fn first_option_key(reply: &str, option_count: usize) -> Option<String> {
    let max = TaskInstance::option_key(option_count.saturating_sub(1));
    reply
        .split(|c: char| !c.is_alphanumeric())
        .filter(|token| !token.is_empty())
        .find_map(|token| {
            if token.len() == 1 {
                let key = token.chars().next().unwrap().to_ascii_uppercase();
                if ('A'..='E').contains(&key) && key <= max {
                    return Some(key.to_string());
                }
            }
            None
        })
}

fn run_labeling(
    task: &TaskInstance,
    context: &[ContextPassage],
    gateway: &Gateway,
    record: &mut PredictionRecord,
) -> Result<(), BenchError> {
    let sentence = task.sentence.as_deref().unwrap_or(&task.question);
    let prompt = fill(
        &gateway.prompts().vuln_label,
        &[
            ("context_section", context_section(context).as_str()),
            ("sentence", sentence),
        ],
    );
    let response = gateway.complete(&gateway.request("", &prompt))?;
    let parsed = parse_labeling_reply(&response);
    record.pred_binary = parsed.verdict;
    record.pred_categories = parsed.categories;
    record.citations = parsed.citations;
    record.explanation = parsed.explanation;
    if record.pred_binary.is_none() {
        record.error = Some(format!(
            "no VULNERABLE/NOT_VULNERABLE verdict in {response:?}"
        ));
    }
    Ok(())
}

struct LabelingReply {
    verdict: Option<bool>,
    categories: BTreeSet<VulnCategory>,
    citations: Vec<String>,
    explanation: Option<String>,
}

fn parse_labeling_reply(response: &str) -> LabelingReply {
    let verdict = if response.contains("NOT_VULNERABLE") || response.contains("NOT VULNERABLE") {
        Some(false)
    } else if response.contains("VULNERABLE") {
        Some(true)
    } else {
        None
    };

    let mut categories = BTreeSet::new();
    for line in response.lines() {
        if let Some(rest) = line.trim().strip_prefix("CATEGORIES:") {
            for piece in rest.split(',') {
                if let Some(category) = VulnCategory::parse_loose(piece) {
                    categories.insert(category);
                }
            }
        }
    }

    let (_, citations) = split_citations(response);

    let explanation = response
        .find("EXPLANATION:")
        .map(|at| response[at + "EXPLANATION:".len()..].trim().to_string())
        .filter(|text| !text.is_empty());

    LabelingReply {
        verdict,
        categories,
        citations,
        explanation,
    }
}

/// Score one prediction's evidence against the task gold.
///
/// Labeling negatives are correct exactly when the prediction is clean with
/// an empty citation set; positives and evidence-requiring QA use the
/// completeness rule.
pub(super) fn evidence_correct_for(
    task: &TaskInstance,
    record: &PredictionRecord,
    mode: EvidenceMode,
) -> Option<bool> {
    if !task.family.requires_evidence(task.stage) {
        return None;
    }
    let predicted: BTreeSet<String> = record.citations.iter().cloned().collect();
    if task.family.is_labeling() {
        match task.gold_binary {
            Some(false) => Some(record.pred_binary == Some(false) && predicted.is_empty()),
            Some(true) => Some(score_evidence(&predicted, &task.gold_evidence, mode)),
            None => None,
        }
    } else {
        Some(score_evidence(&predicted, &task.gold_evidence, mode))
    }
}

/// Run every task and assemble the report. Rows are keyed by task id, so
/// task order never changes any aggregate.
pub fn run_eval(
    tasks: &[TaskInstance],
    config: &PipelineConfig,
    handles: &IndexHandles,
    gateway: &Gateway,
    options: EvalOptions,
) -> Result<EvalReport, BenchError> {
    config.validate()?;
    let records: Vec<PredictionRecord> = tasks
        .iter()
        .map(|task| run_task(task, config, handles, gateway))
        .collect();
    build_report(tasks, &records, gateway, options)
}

/// One evaluation per `k`, sharing indexes and transport. Duplicated `k`
/// values produce identical reports.
pub fn run_ablation(
    tasks: &[TaskInstance],
    k_values: &[usize],
    config: &PipelineConfig,
    handles: &IndexHandles,
    gateway: &Gateway,
    options: EvalOptions,
) -> Result<Vec<(usize, EvalReport)>, BenchError> {
    if !config.use_rag {
        return Err(BenchError::InvalidPipeline(
            "the ablation varies retrieval context size; enable use_rag".to_string(),
        ));
    }
    let mut reports = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let mut variant = config.clone();
        variant.retrieval.k = k;
        let report = run_eval(tasks, &variant, handles, gateway, options)?;
        reports.push((k, report));
    }
    Ok(reports)
}
