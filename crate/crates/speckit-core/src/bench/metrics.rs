//! Evidence matching and F1 metrics.

use std::collections::BTreeSet;

use super::{BenchError, VulnCategory};

/// Citation label normalization used before evidence comparison:
/// case-insensitive, comma spacing canonicalized, whitespace collapsed.
pub fn normalize_label(label: &str) -> String {
    let lowered = label.to_lowercase().replace(',', ", ");
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Evidence matching rule. The default treats a predicted superset of the
/// gold set as correct (the completeness requirement); `Exact` demands set
/// equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvidenceMode {
    #[default]
    Superset,
    Exact,
}

/// Whether a predicted evidence set is correct against the gold set.
pub fn score_evidence(
    predicted: &BTreeSet<String>,
    gold: &BTreeSet<String>,
    mode: EvidenceMode,
) -> bool {
    let predicted: BTreeSet<String> = predicted.iter().map(|l| normalize_label(l)).collect();
    let gold: BTreeSet<String> = gold.iter().map(|l| normalize_label(l)).collect();
    match mode {
        EvidenceMode::Superset => gold.is_subset(&predicted),
        EvidenceMode::Exact => predicted == gold,
    }
}

/// F1 on the positive class; 0 when precision + recall is 0.
pub fn binary_f1(predictions: &[bool], golds: &[bool]) -> Result<f64, BenchError> {
    if predictions.len() != golds.len() {
        return Err(BenchError::LengthMismatch {
            preds: predictions.len(),
            golds: golds.len(),
        });
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (&pred, &gold) in predictions.iter().zip(golds) {
        match (pred, gold) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(f1_from_counts(tp, fp, fn_))
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denominator = 2 * tp + fp + fn_;
    if denominator == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denominator as f64
    }
}

/// Micro- and macro-F1 over multi-label category predictions.
///
/// Evaluation is restricted to instances whose gold set is non-empty;
/// macro-F1 averages only over categories that appear in some gold set.
pub fn multilabel_f1(
    predictions: &[BTreeSet<VulnCategory>],
    golds: &[BTreeSet<VulnCategory>],
) -> Result<(f64, f64), BenchError> {
    if predictions.len() != golds.len() {
        return Err(BenchError::LengthMismatch {
            preds: predictions.len(),
            golds: golds.len(),
        });
    }
    let kept: Vec<(&BTreeSet<VulnCategory>, &BTreeSet<VulnCategory>)> = predictions
        .iter()
        .zip(golds)
        .filter(|(_, gold)| !gold.is_empty())
        .collect();
    if kept.is_empty() {
        return Err(BenchError::NoPositiveInstances);
    }

    let gold_categories: BTreeSet<VulnCategory> = kept
        .iter()
        .flat_map(|(_, gold)| gold.iter().copied())
        .collect();

    let mut pooled_tp = 0usize;
    let mut pooled_fp = 0usize;
    let mut pooled_fn = 0usize;
    let mut per_category_f1 = Vec::with_capacity(gold_categories.len());
    for &category in &gold_categories {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (pred, gold) in &kept {
            match (pred.contains(&category), gold.contains(&category)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        pooled_tp += tp;
        pooled_fp += fp;
        pooled_fn += fn_;
        per_category_f1.push(f1_from_counts(tp, fp, fn_));
    }
    // Predicted categories outside every gold set still cost micro
    // precision.
    for (pred, _) in &kept {
        pooled_fp += pred.iter().filter(|c| !gold_categories.contains(c)).count();
    }

    let micro = f1_from_counts(pooled_tp, pooled_fp, pooled_fn);
    let macro_ = per_category_f1.iter().sum::<f64>() / per_category_f1.len() as f64;
    Ok((micro, macro_))
}
