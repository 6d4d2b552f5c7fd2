//! Metric computation throughput.

use std::collections::BTreeSet;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use speckit_bench::Lcg;
use speckit_core::bench::{binary_f1, multilabel_f1, score_evidence, EvidenceMode, VulnCategory};

fn bench_binary_f1(c: &mut Criterion) {
    let mut rng = Lcg(7);
    let preds: Vec<bool> = (0..10_000).map(|_| rng.next_u64() % 2 == 0).collect();
    let golds: Vec<bool> = (0..10_000).map(|_| rng.next_u64() % 3 == 0).collect();
    c.bench_function("binary_f1_10k", |b| {
        b.iter(|| binary_f1(black_box(&preds), black_box(&golds)).unwrap())
    });
}

fn bench_multilabel_f1(c: &mut Criterion) {
    let mut rng = Lcg(11);
    let random_set = |rng: &mut Lcg| -> BTreeSet<VulnCategory> {
        VulnCategory::ALL
            .into_iter()
            .filter(|_| rng.next_u64() % 4 == 0)
            .collect()
    };
    let preds: Vec<BTreeSet<VulnCategory>> = (0..2_000).map(|_| random_set(&mut rng)).collect();
    let golds: Vec<BTreeSet<VulnCategory>> = (0..2_000).map(|_| random_set(&mut rng)).collect();
    c.bench_function("multilabel_f1_2k", |b| {
        b.iter(|| multilabel_f1(black_box(&preds), black_box(&golds)))
    });
}

fn bench_score_evidence(c: &mut Criterion) {
    let gold: BTreeSet<String> = (0..8)
        .map(|i| format!("TS 24.501, Clause 5.5.{i}"))
        .collect();
    let pred: BTreeSet<String> = (0..12)
        .map(|i| format!("ts 24.501,  clause 5.5.{i}"))
        .collect();
    c.bench_function("score_evidence", |b| {
        b.iter(|| score_evidence(black_box(&pred), black_box(&gold), EvidenceMode::Superset))
    });
}

criterion_group!(
    benches,
    bench_binary_f1,
    bench_multilabel_f1,
    bench_score_evidence
);
criterion_main!(benches);
