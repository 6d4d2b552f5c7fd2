//! Metric invariants: brute-force F1 oracle equivalence, bounds,
//! permutation invariance, and evidence monotonicity.

use std::collections::BTreeSet;

use proptest::prelude::*;

use speckit_core::bench::{
    binary_f1, multilabel_f1, recompute_aggregates, score_evidence, EvidenceMode, Family, TaskRow,
    VulnCategory,
};

/// Independent contingency-count implementation of positive-class F1.
fn oracle_binary_f1(preds: &[bool], golds: &[bool]) -> f64 {
    let tp = preds.iter().zip(golds).filter(|(p, g)| **p && **g).count() as f64;
    let fp = preds.iter().zip(golds).filter(|(p, g)| **p && !**g).count() as f64;
    let fn_ = preds.iter().zip(golds).filter(|(p, g)| !**p && **g).count() as f64;
    let precision = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
    let recall = if tp + fn_ == 0.0 {
        0.0
    } else {
        tp / (tp + fn_)
    };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Independent pooled/per-category contingency implementation of the
/// multi-label F1 pair, restricted to gold-positive instances.
fn oracle_multilabel(
    preds: &[BTreeSet<VulnCategory>],
    golds: &[BTreeSet<VulnCategory>],
) -> Option<(f64, f64)> {
    let kept: Vec<(usize, &BTreeSet<VulnCategory>)> = golds
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .collect();
    if kept.is_empty() {
        return None;
    }
    let mut pooled = (0usize, 0usize, 0usize);
    let mut per_category = Vec::new();
    for category in VulnCategory::ALL {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (i, gold) in &kept {
            match (preds[*i].contains(&category), gold.contains(&category)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        pooled.0 += tp;
        pooled.1 += fp;
        pooled.2 += fn_;
        let appears_in_gold = kept.iter().any(|(_, g)| g.contains(&category));
        if appears_in_gold {
            let denominator = 2 * tp + fp + fn_;
            per_category.push(if denominator == 0 {
                0.0
            } else {
                2.0 * tp as f64 / denominator as f64
            });
        }
    }
    let denominator = 2 * pooled.0 + pooled.1 + pooled.2;
    let micro = if denominator == 0 {
        0.0
    } else {
        2.0 * pooled.0 as f64 / denominator as f64
    };
    let macro_ = per_category.iter().sum::<f64>() / per_category.len() as f64;
    Some((micro, macro_))
}

fn category_set_strategy() -> impl Strategy<Value = BTreeSet<VulnCategory>> {
    proptest::collection::btree_set(
        prop_oneof![
            Just(VulnCategory::DenialOfService),
            Just(VulnCategory::Replay),
            Just(VulnCategory::Downgrade),
            Just(VulnCategory::PrivacyTracking),
            Just(VulnCategory::Spoofing),
            Just(VulnCategory::AuthenticationBypass),
            Just(VulnCategory::Other),
        ],
        0..4,
    )
}

proptest! {
    #[test]
    fn binary_f1_matches_the_oracle(
        pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..50)
    ) {
        let preds: Vec<bool> = pairs.iter().map(|(p, _)| *p).collect();
        let golds: Vec<bool> = pairs.iter().map(|(_, g)| *g).collect();
        let got = binary_f1(&preds, &golds).unwrap();
        let want = oracle_binary_f1(&preds, &golds);
        prop_assert!((got - want).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn multilabel_f1_matches_the_oracle(
        pairs in proptest::collection::vec(
            (category_set_strategy(), category_set_strategy()),
            1..30
        )
    ) {
        let preds: Vec<BTreeSet<VulnCategory>> = pairs.iter().map(|(p, _)| p.clone()).collect();
        let golds: Vec<BTreeSet<VulnCategory>> = pairs.iter().map(|(_, g)| g.clone()).collect();
        match (multilabel_f1(&preds, &golds), oracle_multilabel(&preds, &golds)) {
            (Ok((micro, macro_)), Some((want_micro, want_macro))) => {
                prop_assert!((micro - want_micro).abs() < 1e-9);
                prop_assert!((macro_ - want_macro).abs() < 1e-9);
                prop_assert!((0.0..=1.0).contains(&micro));
                prop_assert!((0.0..=1.0).contains(&macro_));
            }
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "disagreement: {got:?} vs {want:?}"),
        }
    }

    #[test]
    fn adding_predicted_labels_never_unmakes_correct_evidence(
        gold in proptest::collection::btree_set("[a-d]{1,3}", 0..4),
        pred in proptest::collection::btree_set("[a-d]{1,3}", 0..4),
        extra in "[a-z]{1,5}",
    ) {
        let before = score_evidence(&pred, &gold, EvidenceMode::Superset);
        let mut widened = pred.clone();
        widened.insert(extra);
        let after = score_evidence(&widened, &gold, EvidenceMode::Superset);
        prop_assert!(!before || after, "adding a label flipped correct -> incorrect");
    }
}

fn mc_row(task_id: &str, correct: bool) -> TaskRow {
    TaskRow {
        task_id: task_id.to_string(),
        stage: 1,
        family: Family::Mcqa,
        prediction: "A".to_string(),
        citations: Vec::new(),
        judge_score: None,
        answer_correct: Some(correct),
        evidence_correct: Some(correct),
        explain_correct: None,
        pred_binary: None,
        gold_binary: None,
        pred_categories: None,
        gold_categories: None,
        retrieval_calls: 1,
        unscored: false,
        error: None,
    }
}

#[test]
fn aggregates_are_permutation_invariant() {
    let mut rows: Vec<TaskRow> = (0..20)
        .map(|i| mc_row(&format!("t{i:02}"), i % 3 == 0))
        .collect();
    let forward = recompute_aggregates(&rows);
    rows.reverse();
    rows.swap(0, 7);
    let shuffled = recompute_aggregates(&rows);
    assert_eq!(forward, shuffled);
}

#[test]
fn aggregate_rates_stay_in_bounds() {
    let rows: Vec<TaskRow> = (0..9)
        .map(|i| mc_row(&format!("t{i}"), i % 2 == 0))
        .collect();
    let aggregates = recompute_aggregates(&rows);
    for rate in [
        aggregates.accuracy,
        aggregates.score2_rate,
        aggregates.evidence_correct_rate,
        aggregates.binary_f1,
        aggregates.micro_f1,
        aggregates.macro_f1,
        aggregates.evidence_explanation_correct_rate,
    ]
    .into_iter()
    .flatten()
    {
        assert!((0.0..=1.0).contains(&rate));
    }
}
