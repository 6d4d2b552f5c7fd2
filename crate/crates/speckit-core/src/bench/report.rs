//! Report assembly, aggregate metrics, and JSON/CSV emission.
//!
//! Rows are sorted by task id before aggregation, so task execution order
//! can never change a report byte. Judge parse failures mark a row
//! unscored; gateway failures mark it errored; both are excluded from rate
//! denominators and surfaced as counts.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::gateway::{Gateway, GatewayError};

use super::metrics::{binary_f1, multilabel_f1};
use super::run::{evidence_correct_for, EvalOptions, PredictionRecord};
use super::{BenchError, Family, TaskInstance, VulnCategory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub task_id: String,
    pub stage: u8,
    pub family: Family,
    pub prediction: String,
    pub citations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judge_score: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence_correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explain_correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_binary: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_binary: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_categories: Option<BTreeSet<VulnCategory>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_categories: Option<BTreeSet<VulnCategory>>,
    pub retrieval_calls: u64,
    pub unscored: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Aggregate rates; `None` marks a metric with no applicable tasks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Aggregates {
    pub accuracy: Option<f64>,
    pub score2_rate: Option<f64>,
    pub evidence_correct_rate: Option<f64>,
    pub binary_f1: Option<f64>,
    pub micro_f1: Option<f64>,
    pub macro_f1: Option<f64>,
    pub evidence_explanation_correct_rate: Option<f64>,
    pub task_count: usize,
    pub unscored: usize,
    pub errors: usize,
    pub retrieval_calls: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<TaskRow>,
    pub aggregates: Aggregates,
}

/// Score predictions and assemble the sorted report.
pub(super) fn build_report(
    tasks: &[TaskInstance],
    records: &[PredictionRecord],
    gateway: &Gateway,
    options: EvalOptions,
) -> Result<EvalReport, BenchError> {
    let mut rows: Vec<TaskRow> = Vec::with_capacity(tasks.len());
    for (task, record) in tasks.iter().zip(records) {
        rows.push(score_task(task, record, gateway, options));
    }
    rows.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    let aggregates = recompute_aggregates(&rows);
    Ok(EvalReport { rows, aggregates })
}

/// Judge an open-ended prediction on the 0/1/2 rubric, passing the gold
/// evidence along for families that require it.
pub fn score_answer_open(
    prediction: &str,
    task: &TaskInstance,
    gateway: &Gateway,
) -> Result<u8, GatewayError> {
    let gold = task.gold_answer.as_deref().unwrap_or("");
    let gold_evidence = evidence_for_judge(task);
    gateway
        .judge(&task.question, prediction, gold, gold_evidence.as_deref())
        .map(|verdict| verdict.score)
}

/// Score an evidence-and-explanation prediction: the evidence flag follows
/// the completeness rule (a negative control is correct exactly when
/// predicted clean with empty evidence), the explanation is judged for
/// positives.
pub fn score_explanation(
    task: &TaskInstance,
    record: &PredictionRecord,
    gateway: &Gateway,
    mode: crate::bench::EvidenceMode,
) -> Result<(Option<bool>, Option<u8>), GatewayError> {
    let evidence_correct = evidence_correct_for(task, record, mode);
    match task.gold_binary {
        Some(true) => {
            let explanation = record.explanation.clone().unwrap_or_default();
            let verdict = gateway.judge(
                task.sentence.as_deref().unwrap_or(&task.question),
                &explanation,
                task.gold_answer.as_deref().unwrap_or(""),
                evidence_for_judge(task).as_deref(),
            )?;
            Ok((evidence_correct, Some(verdict.score)))
        }
        _ => Ok((evidence_correct, None)),
    }
}

fn score_task(
    task: &TaskInstance,
    record: &PredictionRecord,
    gateway: &Gateway,
    options: EvalOptions,
) -> TaskRow {
    let mut row = TaskRow {
        task_id: task.task_id.clone(),
        stage: task.stage,
        family: task.family.clone(),
        prediction: String::new(),
        citations: record.citations.clone(),
        judge_score: None,
        answer_correct: None,
        evidence_correct: None,
        explain_correct: None,
        pred_binary: record.pred_binary,
        gold_binary: task.gold_binary,
        pred_categories: None,
        gold_categories: task.gold_categories.clone(),
        retrieval_calls: record.retrieval_calls,
        unscored: false,
        error: record.error.clone(),
    };
    if record.error.is_some() {
        row.prediction = record.answer.clone().unwrap_or_default();
        return row;
    }

    let options_present = task.options.as_ref().is_some_and(|o| !o.is_empty());
    if task.family.is_multiple_choice(options_present) && !task.family.is_labeling() {
        let predicted = record.answer.clone().unwrap_or_default();
        row.prediction = predicted.clone();
        let gold = task.gold_answer.as_deref().unwrap_or("").trim();
        row.answer_correct = Some(predicted.eq_ignore_ascii_case(gold));
        row.evidence_correct = evidence_correct_for(task, record, options.evidence_mode);
    } else if task.family.is_labeling() {
        row.prediction = match record.pred_binary {
            Some(true) => "VULNERABLE".to_string(),
            Some(false) => "NOT_VULNERABLE".to_string(),
            None => String::new(),
        };
        row.pred_categories = Some(record.pred_categories.clone());
        row.evidence_correct = evidence_correct_for(task, record, options.evidence_mode);
        if task.family == Family::Explain {
            score_explanation_row(task, record, gateway, options.evidence_mode, &mut row);
        }
    } else {
        let answer = record.answer.clone().unwrap_or_default();
        row.prediction = answer.clone();
        row.evidence_correct = evidence_correct_for(task, record, options.evidence_mode);
        match score_answer_open(&answer, task, gateway) {
            Ok(score) => {
                row.judge_score = Some(score);
                row.answer_correct = Some(score == 2);
            }
            Err(GatewayError::UnparseableVerdict(_)) => row.unscored = true,
            Err(err) => row.error = Some(err.to_string()),
        }
    }
    row
}

/// A negative control is correct when predicted clean with empty evidence;
/// a positive needs the complete gold evidence set and a fully correct
/// explanation.
fn score_explanation_row(
    task: &TaskInstance,
    record: &PredictionRecord,
    gateway: &Gateway,
    mode: crate::bench::EvidenceMode,
    row: &mut TaskRow,
) {
    match score_explanation(task, record, gateway, mode) {
        Ok((evidence_correct, None)) => {
            row.explain_correct = evidence_correct;
        }
        Ok((evidence_correct, Some(score))) => {
            row.judge_score = Some(score);
            row.explain_correct = Some(evidence_correct == Some(true) && score == 2);
        }
        Err(GatewayError::UnparseableVerdict(_)) => row.unscored = true,
        Err(err) => row.error = Some(err.to_string()),
    }
}

fn evidence_for_judge(task: &TaskInstance) -> Option<String> {
    if task.gold_evidence.is_empty() {
        None
    } else {
        Some(
            task.gold_evidence
                .iter()
                .cloned()
                .collect::<Vec<_>>()
                .join("; "),
        )
    }
}

/// Recompute every aggregate from the rows. Pure; used both at build time
/// and as the emit-time consistency check.
pub fn recompute_aggregates(rows: &[TaskRow]) -> Aggregates {
    let usable: Vec<&TaskRow> = rows
        .iter()
        .filter(|r| r.error.is_none() && !r.unscored)
        .collect();

    let rate = |values: Vec<bool>| -> Option<f64> {
        if values.is_empty() {
            None
        } else {
            Some(values.iter().filter(|v| **v).count() as f64 / values.len() as f64)
        }
    };

    let accuracy = rate(
        usable
            .iter()
            .filter_map(|r| r.answer_correct.filter(|_| r.judge_score.is_none()))
            .collect(),
    );
    // Explanation judge scores feed their own aggregate below, not the
    // open-QA score-2 rate.
    let judged: Vec<&&TaskRow> = usable
        .iter()
        .filter(|r| r.judge_score.is_some() && !r.family.is_labeling())
        .collect();
    let score2_rate = if judged.is_empty() {
        None
    } else {
        Some(
            judged.iter().filter(|r| r.judge_score == Some(2)).count() as f64 / judged.len() as f64,
        )
    };
    let evidence_correct_rate = rate(usable.iter().filter_map(|r| r.evidence_correct).collect());
    let evidence_explanation_correct_rate = rate(
        usable
            .iter()
            .filter(|r| r.family == Family::Explain)
            .filter_map(|r| r.explain_correct)
            .collect(),
    );

    let label_rows: Vec<&&TaskRow> = usable
        .iter()
        .filter(|r| r.family == Family::Label)
        .filter(|r| r.pred_binary.is_some() && r.gold_binary.is_some())
        .collect();
    let (binary, micro, macro_) = if label_rows.is_empty() {
        (None, None, None)
    } else {
        let preds: Vec<bool> = label_rows.iter().map(|r| r.pred_binary.unwrap()).collect();
        let golds: Vec<bool> = label_rows.iter().map(|r| r.gold_binary.unwrap()).collect();
        let binary = binary_f1(&preds, &golds).ok();
        let pred_cats: Vec<BTreeSet<VulnCategory>> = label_rows
            .iter()
            .map(|r| r.pred_categories.clone().unwrap_or_default())
            .collect();
        let gold_cats: Vec<BTreeSet<VulnCategory>> = label_rows
            .iter()
            .map(|r| r.gold_categories.clone().unwrap_or_default())
            .collect();
        match multilabel_f1(&pred_cats, &gold_cats) {
            Ok((micro, macro_)) => (binary, Some(micro), Some(macro_)),
            Err(_) => (binary, None, None),
        }
    };

    Aggregates {
        accuracy,
        score2_rate,
        evidence_correct_rate,
        binary_f1: binary,
        micro_f1: micro,
        macro_f1: macro_,
        evidence_explanation_correct_rate,
        task_count: rows.len(),
        unscored: rows.iter().filter(|r| r.unscored).count(),
        errors: rows.iter().filter(|r| r.error.is_some()).count(),
        retrieval_calls: rows.iter().map(|r| r.retrieval_calls).sum(),
    }
}

fn check_aggregates(report: &EvalReport) -> Result<(), BenchError> {
    let recount = recompute_aggregates(&report.rows);
    if recount != report.aggregates {
        return Err(BenchError::AggregateMismatch(format!(
            "stored {:?} vs recomputed {recount:?}",
            report.aggregates
        )));
    }
    Ok(())
}

/// Write `report.json` with stable key order; aggregates are recomputed and
/// checked first.
pub fn write_report_json(report: &EvalReport, path: &Path) -> Result<(), BenchError> {
    check_aggregates(report)?;
    let mut body = serde_json::to_string_pretty(report).expect("report serializes");
    body.push('\n');
    fs::write(path, body).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write `report.csv`: a header plus one row per task.
pub fn write_report_csv(report: &EvalReport, path: &Path) -> Result<(), BenchError> {
    check_aggregates(report)?;
    let mut out = String::from(
        "task_id,stage,family,prediction,judge_score,answer_correct,evidence_correct,\
         explain_correct,retrieval_calls,unscored,error,citations\n",
    );
    for row in &report.rows {
        let fields = [
            row.task_id.clone(),
            row.stage.to_string(),
            row.family.as_str(),
            row.prediction.clone(),
            option_str(&row.judge_score),
            option_str(&row.answer_correct),
            option_str(&row.evidence_correct),
            option_str(&row.explain_correct),
            row.retrieval_calls.to_string(),
            row.unscored.to_string(),
            row.error.clone().unwrap_or_default(),
            row.citations.join("; "),
        ];
        let encoded: Vec<String> = fields.iter().map(|f| csv_escape(f)).collect();
        out.push_str(&encoded.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn option_str<T: ToString>(value: &Option<T>) -> String {
    value.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Side-by-side per-family summary of an ablation run.
pub fn ablation_summary(reports: &[(usize, EvalReport)]) -> String {
    let mut families: BTreeSet<String> = BTreeSet::new();
    for (_, report) in reports {
        for row in &report.rows {
            families.insert(row.family.as_str());
        }
    }
    let mut out = String::from("family");
    for (k, _) in reports {
        out.push_str(&format!(",k={k} score2,k={k} evidence"));
    }
    out.push('\n');
    for family in families {
        out.push_str(&family);
        for (_, report) in reports {
            let rows: Vec<&TaskRow> = report
                .rows
                .iter()
                .filter(|r| r.family.as_str() == family)
                .collect();
            let score2 = fraction(&rows, |r| {
                r.judge_score.map(|s| s == 2).or(r.answer_correct)
            });
            let evidence = fraction(&rows, |r| r.evidence_correct);
            out.push_str(&format!(",{},{}", fmt_rate(score2), fmt_rate(evidence)));
        }
        out.push('\n');
    }
    out
}

fn fraction(rows: &[&TaskRow], get: impl Fn(&TaskRow) -> Option<bool>) -> Option<f64> {
    let values: Vec<bool> = rows.iter().filter_map(|r| get(r)).collect();
    if values.is_empty() {
        None
    } else {
        Some(values.iter().filter(|v| **v).count() as f64 / values.len() as f64)
    }
}

fn fmt_rate(rate: Option<f64>) -> String {
    match rate {
        Some(rate) => format!("{:.4}", rate),
        None => "-".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(task_id: &str) -> TaskRow {
        TaskRow {
            task_id: task_id.to_string(),
            stage: 1,
            family: Family::Mcqa,
            prediction: "A".to_string(),
            citations: Vec::new(),
            judge_score: None,
            answer_correct: Some(true),
            evidence_correct: None,
            explain_correct: None,
            pred_binary: None,
            gold_binary: None,
            pred_categories: None,
            gold_categories: None,
            retrieval_calls: 0,
            unscored: false,
            error: None,
        }
    }

    #[test]
    fn empty_report_has_absent_aggregates() {
        let aggregates = recompute_aggregates(&[]);
        assert_eq!(aggregates.accuracy, None);
        assert_eq!(aggregates.score2_rate, None);
        assert_eq!(aggregates.task_count, 0);
    }

    #[test]
    fn emitting_twice_is_byte_identical() {
        let rows = vec![row("a"), row("b")];
        let aggregates = recompute_aggregates(&rows);
        let report = EvalReport { rows, aggregates };
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("one.json");
        let second = dir.path().join("two.json");
        write_report_json(&report, &first).unwrap();
        write_report_json(&report, &second).unwrap();
        assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    }

    #[test]
    fn csv_has_header_plus_one_line_per_task() {
        let rows = vec![row("a"), row("b"), row("c")];
        let aggregates = recompute_aggregates(&rows);
        let report = EvalReport { rows, aggregates };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        write_report_csv(&report, &path).unwrap();
        let body = fs::read_to_string(&path).unwrap();
        assert_eq!(body.lines().count(), 4);
    }

    #[test]
    fn tampered_aggregates_fail_emission() {
        let rows = vec![row("a")];
        let mut aggregates = recompute_aggregates(&rows);
        aggregates.accuracy = Some(0.25);
        let report = EvalReport { rows, aggregates };
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            write_report_json(&report, &dir.path().join("r.json")),
            Err(BenchError::AggregateMismatch(_))
        ));
    }

    #[test]
    fn csv_escaping_quotes_commas() {
        assert_eq!(csv_escape("plain"), "plain");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn unscored_rows_leave_denominators() {
        let mut unscored = row("u");
        unscored.unscored = true;
        unscored.answer_correct = Some(false);
        let rows = vec![row("a"), unscored];
        let aggregates = recompute_aggregates(&rows);
        assert_eq!(aggregates.accuracy, Some(1.0));
        assert_eq!(aggregates.unscored, 1);
    }
}
