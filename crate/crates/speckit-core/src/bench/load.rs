//! Task file loading: JSON lines, one task per line, schema-validated with
//! line numbers, optionally checked against the official per-stage counts.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::{BenchError, Family, TaskInstance};

/// How to treat official-count mismatches. Third-party task files remain
/// loadable under the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountCheck {
    Off,
    #[default]
    Warn,
    Error,
}

#[derive(Debug)]
pub struct LoadOutcome {
    pub tasks: Vec<TaskInstance>,
    pub warnings: Vec<String>,
}

/// Load and validate tasks, keeping only `stage_filter` when given.
pub fn load_tasks(
    path: &Path,
    stage_filter: Option<u8>,
    count_check: CountCheck,
) -> Result<LoadOutcome, BenchError> {
    let raw = fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;

    let mut tasks: Vec<TaskInstance> = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (index, line) in raw.lines().enumerate() {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let task: TaskInstance =
            serde_json::from_str(line).map_err(|err| BenchError::SchemaViolation {
                line: line_no,
                detail: err.to_string(),
            })?;
        validate_task(&task, line_no)?;
        if !seen_ids.insert(task.task_id.clone()) {
            return Err(BenchError::SchemaViolation {
                line: line_no,
                detail: format!("duplicate task_id {:?}", task.task_id),
            });
        }
        if stage_filter.is_none() || stage_filter == Some(task.stage) {
            tasks.push(task);
        }
    }

    let warnings = match count_check {
        CountCheck::Off => Vec::new(),
        CountCheck::Warn | CountCheck::Error => {
            let findings = official_count_findings(&tasks, stage_filter);
            if count_check == CountCheck::Error && !findings.is_empty() {
                return Err(BenchError::CountMismatch(findings.join("; ")));
            }
            findings
        }
    };

    Ok(LoadOutcome { tasks, warnings })
}

fn validate_task(task: &TaskInstance, line: usize) -> Result<(), BenchError> {
    let fail = |detail: String| {
        Err(BenchError::SchemaViolation {
            line,
            detail: format!("task {:?}: {detail}", task.task_id),
        })
    };
    if task.task_id.trim().is_empty() {
        return fail("task_id must be non-empty".to_string());
    }
    if !(1..=3).contains(&task.stage) {
        return fail(format!("stage {} is not 1, 2, or 3", task.stage));
    }

    let options_present = task.options.as_ref().is_some_and(|o| !o.is_empty());
    if task.family.is_multiple_choice(options_present) && !task.family.is_labeling() {
        let Some(options) = task.options.as_ref().filter(|o| !o.is_empty()) else {
            return fail("multiple-choice task without options".to_string());
        };
        // Option keys run A through E.
        if options.len() > 5 {
            return fail("more than 5 options".to_string());
        }
        // Exactly one compliant option: the gold answer must be a single
        // option key within range.
        let gold = task.gold_answer.as_deref().unwrap_or("").trim();
        let mut keys = gold.chars().filter(|c| c.is_ascii_alphabetic());
        let (first, second) = (keys.next(), keys.next());
        let valid = match (first, second) {
            (Some(key), None) => {
                let key = key.to_ascii_uppercase();
                let max = TaskInstance::option_key(options.len() - 1);
                gold.len() == 1 && ('A'..=max).contains(&key)
            }
            _ => false,
        };
        if !valid {
            return fail(format!(
                "gold_answer {gold:?} must name exactly one option key"
            ));
        }
    } else if task.family.is_labeling() {
        if task.sentence.as_deref().unwrap_or("").trim().is_empty() {
            return fail("labeling task without a sentence".to_string());
        }
        let Some(gold_binary) = task.gold_binary else {
            return fail("labeling task without gold_binary".to_string());
        };
        if gold_binary {
            if task.gold_evidence.is_empty() {
                return fail("positive labeling task with empty gold_evidence".to_string());
            }
            if task.family == Family::Explain
                && task.gold_answer.as_deref().unwrap_or("").trim().is_empty()
            {
                return fail(
                    "positive EXPLAIN task without a gold explanation in gold_answer".to_string(),
                );
            }
        } else if !task.gold_evidence.is_empty() {
            return fail("negative control with non-empty gold_evidence".to_string());
        }
    } else if task.gold_answer.as_deref().unwrap_or("").trim().is_empty() {
        return fail("open-ended task without gold_answer".to_string());
    }

    // Stage >= 2 families carry gold evidence, except labeling negatives.
    let negative_control = task.family.is_labeling() && task.gold_binary == Some(false);
    if task.stage >= 2
        && task.family.requires_evidence(task.stage)
        && !negative_control
        && task.gold_evidence.is_empty()
    {
        return fail("stage >= 2 task with empty gold_evidence".to_string());
    }
    Ok(())
}

/// Compare per-stage counts against the published benchmark statistics.
fn official_count_findings(tasks: &[TaskInstance], stage_filter: Option<u8>) -> Vec<String> {
    let mut findings = Vec::new();
    let count = |pred: &dyn Fn(&TaskInstance) -> bool| tasks.iter().filter(|t| pred(t)).count();

    let stages: Vec<u8> = match stage_filter {
        Some(stage) => vec![stage],
        None => vec![1, 2, 3],
    };
    for stage in stages {
        let native =
            |t: &TaskInstance| t.stage == stage && !matches!(t.family, Family::External(_));
        let external =
            |t: &TaskInstance| t.stage == stage && matches!(t.family, Family::External(_));
        match stage {
            1 => {
                expect(&mut findings, "stage 1 native", count(&native), 4_500);
                expect(&mut findings, "stage 1 external", count(&external), 1_000);
            }
            2 => {
                expect(&mut findings, "stage 2 native", count(&native), 4_500);
                expect(&mut findings, "stage 2 external", count(&external), 500);
            }
            3 => {
                let ccqa = count(&|t| t.stage == 3 && t.family == Family::Ccqa);
                let tfqa = count(&|t| t.stage == 3 && t.family == Family::Tfqa);
                let labeling = count(&|t| t.stage == 3 && t.family.is_labeling());
                let external = count(&external);
                expect(&mut findings, "stage 3 CCQA", ccqa, 222);
                expect(&mut findings, "stage 3 TFQA", tfqa, 747);
                expect(&mut findings, "stage 3 labeling", labeling, 300);
                expect(
                    &mut findings,
                    "stage 3 external",
                    external,
                    1_454 + 320 + 55,
                );
            }
            _ => {}
        }
    }
    findings
}

fn expect(findings: &mut Vec<String>, what: &str, got: usize, want: usize) {
    if got != want {
        findings.push(format!("{what}: expected {want}, found {got}"));
    }
}
