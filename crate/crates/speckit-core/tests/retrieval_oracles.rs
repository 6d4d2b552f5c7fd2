//! Independent oracles for the hybrid retrieval pipeline: a hand-computed
//! BM25 check, a brute-force dense recomputation, and a full-scan ranking
//! oracle, plus the ranking invariants.

use std::collections::BTreeSet;

use speckit_core::corpus::{ComponentKind, ComponentSpace, SpecComponent};
use speckit_core::retrieval::{
    build_index, min_max_normalize, tokenize, HybridIndex, RetrievalConfig, RetrievalError, SvdDim,
};

fn component(spec_id: &str, clause_id: &str, seq: usize, content: &str) -> SpecComponent {
    SpecComponent {
        component_id: format!("{spec_id}/{clause_id}/text/{seq}"),
        kind: ComponentKind::Text,
        spec_id: spec_id.to_string(),
        clause_id: clause_id.to_string(),
        label: None,
        content: content.to_string(),
        source_char_span: (0, content.len()),
    }
}

fn space_of(contents: &[&str]) -> ComponentSpace {
    let components: Vec<SpecComponent> = contents
        .iter()
        .enumerate()
        .map(|(i, text)| component("TS 24.501", &format!("{}", i + 1), 0, text))
        .collect();
    ComponentSpace {
        spec_ids: ["TS 24.501".to_string()].into_iter().collect(),
        components,
        stats: Default::default(),
    }
}

fn config(svd_dim: usize) -> RetrievalConfig {
    RetrievalConfig {
        svd_dim: SvdDim::Exact(svd_dim),
        ..RetrievalConfig::default()
    }
}

const THREE_DOCS: [&str; 3] = [
    "nas integrity protection applies",
    "integrity of the nas signalling",
    "registration procedure details",
];

/// Straight-from-the-formula BM25, independent of the index internals.
fn oracle_bm25(query: &str, chunk_idx: usize, chunks: &[&str], k1: f64, b: f64) -> f64 {
    let tokenized: Vec<Vec<String>> = chunks.iter().map(|c| tokenize(c)).collect();
    let n = chunks.len() as f64;
    let avg_len = tokenized.iter().map(|t| t.len() as f64).sum::<f64>() / n;
    let unique: BTreeSet<String> = tokenize(query).into_iter().collect();
    let mut score = 0.0;
    for term in unique {
        let df = tokenized.iter().filter(|t| t.contains(&term)).count() as f64;
        if df == 0.0 {
            continue;
        }
        let tf = tokenized[chunk_idx].iter().filter(|t| **t == term).count() as f64;
        if tf == 0.0 {
            continue;
        }
        let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
        let len = tokenized[chunk_idx].len() as f64;
        score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avg_len));
    }
    score
}

#[test]
fn bm25_hand_check_on_the_three_doc_fixture() {
    let index = build_index(&space_of(&THREE_DOCS), &config(3)).unwrap();
    let query_tokens = tokenize("nas integrity");

    // Frozen from the hand computation with k1 = 1.2, b = 0.75:
    //   idf(nas) = idf(integrity) = ln(1.6)
    //   c0 (len 4 = avg): 2 * idf           = 0.9400072584914713
    //   c1 (len 5):       2 * idf * 2.2/2.425 = 0.8527900901778297
    //   c2: no query term                     = 0
    let expected = [0.940_007_258_491_471_3, 0.852_790_090_177_829_7, 0.0];
    for (i, want) in expected.iter().enumerate() {
        let id = format!("TS 24.501/{}/text/0", i + 1);
        let got = index.sparse_score(&query_tokens, &id).unwrap();
        assert!(
            (got - want).abs() < 1e-9,
            "chunk {i}: got {got}, want {want}"
        );
        let oracle = oracle_bm25("nas integrity", i, &THREE_DOCS, 1.2, 0.75);
        assert!((got - oracle).abs() < 1e-9, "oracle disagrees on chunk {i}");
    }
}

#[test]
fn absent_term_scores_zero_and_symmetry_holds() {
    let space = space_of(&[
        "integrity applies here now",
        "integrity applies here too",
        "something else entirely maybe",
    ]);
    let index = build_index(&space, &config(3)).unwrap();
    let q = tokenize("integrity");
    assert_eq!(index.sparse_score(&q, "TS 24.501/3/text/0").unwrap(), 0.0);
    // Equal-length chunks with one occurrence each score identically.
    let a = index.sparse_score(&q, "TS 24.501/1/text/0").unwrap();
    let b = index.sparse_score(&q, "TS 24.501/2/text/0").unwrap();
    assert_eq!(a, b);
    assert!(a > 0.0);
}

#[test]
fn unknown_chunk_is_an_error() {
    let index = build_index(&space_of(&THREE_DOCS), &config(3)).unwrap();
    assert!(matches!(
        index.sparse_score(&tokenize("nas"), "TS 24.501/9/text/9"),
        Err(RetrievalError::UnknownChunk(_))
    ));
    assert!(matches!(
        index.dense_score("nas", "TS 24.501/9/text/9"),
        Err(RetrievalError::UnknownChunk(_))
    ));
}

/// Brute-force dense recomputation: explicit TF-IDF loops, explicit
/// matrix-multiply projection through the stored basis, explicit cosine.
fn oracle_dense(index: &HybridIndex, query: &str, chunk_idx: usize) -> f64 {
    let vocab = index.vocab();
    let dim = index.svd_dim();
    let basis = index.basis();

    let weights_of = |tokens: &[String]| -> Vec<f64> {
        let mut tf = vec![0u32; vocab.len()];
        for token in tokens {
            if let Some(at) = vocab.iter().position(|v| v == token) {
                tf[at] += 1;
            }
        }
        tf.iter()
            .enumerate()
            .map(|(t, &count)| {
                if count == 0 {
                    0.0
                } else {
                    (1.0 + (count as f64).ln()) * index.dense_idf()[t]
                }
            })
            .collect()
    };

    let project = |weights: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (t, &w) in weights.iter().enumerate() {
            for (j, slot) in out.iter_mut().enumerate() {
                *slot += w * basis[t * dim + j];
            }
        }
        out
    };

    let q_proj = project(&weights_of(&tokenize(query)));
    let mut chunk_weights = weights_of(&tokenize(&index.chunks()[chunk_idx].content));
    let norm: f64 = chunk_weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for w in chunk_weights.iter_mut() {
            *w /= norm;
        }
    }
    let c_proj = project(&chunk_weights);

    let dot: f64 = q_proj.iter().zip(&c_proj).map(|(a, b)| a * b).sum();
    let qn: f64 = q_proj.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cn: f64 = c_proj.iter().map(|x| x * x).sum::<f64>().sqrt();
    if qn <= 1e-12 || cn <= 1e-12 {
        0.0
    } else {
        dot / (qn * cn)
    }
}

#[test]
fn dense_score_matches_the_matrix_multiply_oracle() {
    let index = build_index(&space_of(&THREE_DOCS), &config(3)).unwrap();
    for query in ["nas integrity", "registration", "integrity signalling nas"] {
        for (i, chunk) in index.chunks().iter().enumerate() {
            let got = index.dense_score(query, &chunk.component_id).unwrap();
            let want = oracle_dense(&index, query, i);
            assert!(
                (got - want).abs() < 1e-9,
                "query {query:?} chunk {i}: got {got}, want {want}"
            );
        }
    }
}

#[test]
fn self_similarity_is_one_and_oov_is_zero() {
    let index = build_index(&space_of(&THREE_DOCS), &config(3)).unwrap();
    let got = index
        .dense_score(THREE_DOCS[0], "TS 24.501/1/text/0")
        .unwrap();
    assert!((got - 1.0).abs() < 1e-9, "self-cosine was {got}");
    let oov = index
        .dense_score("zzz qqq www", "TS 24.501/1/text/0")
        .unwrap();
    assert_eq!(oov, 0.0);
}

/// Full-scan oracle: score every chunk through the public scoring API,
/// normalize, fuse, sort (fused desc, component id asc), truncate.
fn oracle_ranking(index: &HybridIndex, query: &str, k: usize, alpha: f64) -> Vec<String> {
    let query_tokens = tokenize(query);
    let ids: Vec<String> = index
        .chunks()
        .iter()
        .map(|c| c.component_id.clone())
        .collect();
    let sparse: Vec<f64> = ids
        .iter()
        .map(|id| index.sparse_score(&query_tokens, id).unwrap())
        .collect();
    let dense: Vec<f64> = ids
        .iter()
        .map(|id| index.dense_score(query, id).unwrap())
        .collect();
    let sparse_norm = min_max_normalize(&sparse);
    let dense_norm = min_max_normalize(&dense);
    let mut order: Vec<usize> = (0..ids.len()).collect();
    let fused: Vec<f64> = (0..ids.len())
        .map(|i| alpha * sparse_norm[i] + (1.0 - alpha) * dense_norm[i])
        .collect();
    order.sort_by(|&a, &b| {
        fused[b]
            .total_cmp(&fused[a])
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    order.truncate(k);
    order.into_iter().map(|i| ids[i].clone()).collect()
}

struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[(self.next() as usize) % items.len()]
    }

    fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next() as usize) % (hi - lo)
    }
}

const WORDS: [&str; 24] = [
    "nas",
    "integrity",
    "protection",
    "registration",
    "procedure",
    "security",
    "mode",
    "control",
    "timer",
    "state",
    "message",
    "request",
    "accept",
    "reject",
    "emergency",
    "identity",
    "authentication",
    "context",
    "ue",
    "amf",
    "5.5.1",
    "5.4.2",
    "t3521",
    "clause",
];

fn random_space(rng: &mut Lcg, n_chunks: usize) -> ComponentSpace {
    let contents: Vec<String> = (0..n_chunks)
        .map(|_| {
            let len = rng.range(4, 30);
            (0..len)
                .map(|_| *rng.pick(&WORDS))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    space_of(&contents.iter().map(String::as_str).collect::<Vec<_>>())
}

fn random_query(rng: &mut Lcg) -> String {
    let len = rng.range(1, 5);
    let mut words: Vec<String> = (0..len).map(|_| rng.pick(&WORDS).to_string()).collect();
    if rng.range(0, 10) == 0 {
        words.push(format!("zzz{}", rng.range(0, 100)));
    }
    words.join(" ")
}

#[test]
fn retrieve_matches_the_full_scan_oracle() {
    let mut rng = Lcg(7);
    for (n_chunks, dim) in [(10, 4), (40, 8)] {
        let space = random_space(&mut rng, n_chunks);
        let index = build_index(&space, &config(dim)).unwrap();
        for _ in 0..25 {
            let query = random_query(&mut rng);
            let k = rng.range(1, 12);
            let alpha = [0.0, 0.25, 0.5, 1.0][rng.range(0, 4)];
            let got: Vec<String> = index
                .retrieve_with(&query, k, alpha)
                .unwrap()
                .items
                .into_iter()
                .map(|item| item.component_id)
                .collect();
            let want = oracle_ranking(&index, &query, k, alpha);
            assert_eq!(got, want, "query {query:?} k {k} alpha {alpha}");
        }
    }
}

#[test]
fn k_exceeding_the_corpus_returns_everything_ranked() {
    let index = build_index(&space_of(&THREE_DOCS), &config(3)).unwrap();
    let evidence = index.retrieve_with("integrity", 8, 0.5).unwrap();
    assert_eq!(evidence.m, 3);
    assert_eq!(evidence.items.len(), 3);
}

#[test]
fn empty_query_is_rejected() {
    let index = build_index(&space_of(&THREE_DOCS), &config(3)).unwrap();
    assert!(matches!(
        index.retrieve(" ... "),
        Err(RetrievalError::EmptyQuery)
    ));
}

#[test]
fn fused_scores_are_bounded_and_consistent() {
    let mut rng = Lcg(11);
    let space = random_space(&mut rng, 20);
    let index = build_index(&space, &config(6)).unwrap();
    for _ in 0..20 {
        let evidence = index
            .retrieve_with(&random_query(&mut rng), 20, 0.5)
            .unwrap();
        for item in &evidence.items {
            let s = item.score;
            assert!((0.0..=1.0).contains(&s.sparse_norm));
            assert!((0.0..=1.0).contains(&s.dense_norm));
            assert!((0.0..=1.0).contains(&s.fused));
            let identity = 0.5 * s.sparse_norm + 0.5 * s.dense_norm;
            assert!((s.fused - identity).abs() < 1e-12);
        }
    }
}

#[test]
fn insertion_order_does_not_change_rankings() {
    let mut rng = Lcg(13);
    let space = random_space(&mut rng, 15);
    let mut reversed = space.clone();
    reversed.components.reverse();
    let forward = build_index(&space, &config(5)).unwrap();
    let backward = build_index(&reversed, &config(5)).unwrap();
    for _ in 0..15 {
        let query = random_query(&mut rng);
        let a: Vec<String> = forward
            .retrieve_with(&query, 10, 0.5)
            .unwrap()
            .items
            .into_iter()
            .map(|i| i.component_id)
            .collect();
        let b: Vec<String> = backward
            .retrieve_with(&query, 10, 0.5)
            .unwrap()
            .items
            .into_iter()
            .map(|i| i.component_id)
            .collect();
        assert_eq!(a, b, "query {query:?}");
    }
}

#[test]
fn alpha_endpoints_follow_the_single_signal_ordering() {
    let mut rng = Lcg(17);
    let space = random_space(&mut rng, 12);
    let index = build_index(&space, &config(5)).unwrap();
    for _ in 0..10 {
        let query = random_query(&mut rng);
        let n = index.len();
        let all_sparse = index.retrieve_with(&query, n, 1.0).unwrap();
        let all_dense = index.retrieve_with(&query, n, 0.0).unwrap();
        for (items, which) in [(&all_sparse.items, "sparse"), (&all_dense.items, "dense")] {
            for pair in items.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                let (na, nb) = match which {
                    "sparse" => (a.score.sparse_norm, b.score.sparse_norm),
                    _ => (a.score.dense_norm, b.score.dense_norm),
                };
                assert!(
                    na > nb || (na == nb && a.component_id < b.component_id),
                    "{which} ordering violated for {query:?}"
                );
            }
        }
    }
}

#[test]
fn repeating_a_query_term_never_lowers_that_chunks_score() {
    let mut rng = Lcg(19);
    for _ in 0..20 {
        let space = random_space(&mut rng, 8);
        let target = rng.range(0, 8);
        let term = "integrity";
        let mut boosted = space.clone();
        boosted.components[target].content =
            format!("{} {term}", boosted.components[target].content);

        let base_index = build_index(&space, &config(4)).unwrap();
        let boosted_index = build_index(&boosted, &config(4)).unwrap();
        let id = space.components[target].component_id.clone();
        let q = tokenize(term);
        let before = base_index.sparse_score(&q, &id).unwrap();
        let after = boosted_index.sparse_score(&q, &id).unwrap();
        assert!(
            after >= before - 1e-12,
            "score dropped from {before} to {after}"
        );
    }
}

#[test]
fn emergency_registration_query_surfaces_the_expected_clauses() {
    // Miniature TS 24.501 rendition: the registration and security mode
    // control clauses carry the emergency-registration and NAS-integrity
    // vocabulary, the distractors do not.
    let components = vec![
        component(
            "TS 24.501",
            "5.5.1",
            0,
            "Registration procedure. For emergency registration the UE initiates \
             registration and the AMF may proceed before NAS integrity is established.",
        ),
        component(
            "TS 24.501",
            "5.4.2",
            0,
            "Security mode control procedure. NAS integrity protection is established \
             when the AMF initiates the security mode control procedure during registration.",
        ),
        component(
            "TS 24.501",
            "5.3.7",
            0,
            "Handling of timers in 5GMM-IDLE mode and power saving mode.",
        ),
        component(
            "TS 24.501",
            "9.11.3",
            0,
            "Information element coding for mobility management.",
        ),
    ];
    let space = ComponentSpace {
        spec_ids: ["TS 24.501".to_string()].into_iter().collect(),
        components,
        stats: Default::default(),
    };
    let index = build_index(&space, &config(4)).unwrap();
    let evidence = index
        .retrieve_with(
            "During Emergency Registration, when is NAS integrity established?",
            2,
            0.5,
        )
        .unwrap();
    let labels: Vec<&str> = evidence.items.iter().map(|i| i.label.as_str()).collect();
    assert!(labels.contains(&"TS 24.501, Clause 5.5.1"), "{labels:?}");
    assert!(labels.contains(&"TS 24.501, Clause 5.4.2"), "{labels:?}");
}

#[test]
fn index_round_trips_and_rebuilds_byte_identically() {
    let mut rng = Lcg(23);
    let space = random_space(&mut rng, 12);
    let cfg = config(5);

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let dir_c = tempfile::tempdir().unwrap();
    build_index(&space, &cfg)
        .unwrap()
        .save(dir_a.path())
        .unwrap();
    build_index(&space, &cfg)
        .unwrap()
        .save(dir_b.path())
        .unwrap();
    HybridIndex::load(dir_a.path())
        .unwrap()
        .save(dir_c.path())
        .unwrap();

    for file in ["chunks.jsonl", "sparse.bin", "dense.bin", "config.json"] {
        let a = std::fs::read(dir_a.path().join(file)).unwrap();
        let b = std::fs::read(dir_b.path().join(file)).unwrap();
        let c = std::fs::read(dir_c.path().join(file)).unwrap();
        assert_eq!(a, b, "rebuild of {file} differs");
        assert_eq!(a, c, "load/save of {file} differs");
    }
}

#[test]
fn loaded_index_scores_like_the_original() {
    let mut rng = Lcg(29);
    let space = random_space(&mut rng, 10);
    let index = build_index(&space, &config(4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    index.save(dir.path()).unwrap();
    let loaded = HybridIndex::load(dir.path()).unwrap();
    for _ in 0..10 {
        let query = random_query(&mut rng);
        let a = index.retrieve_with(&query, 5, 0.5).unwrap();
        let b = loaded.retrieve_with(&query, 5, 0.5).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn the_index_serves_concurrent_readers() {
    let mut rng = Lcg(31);
    let space = random_space(&mut rng, 20);
    let index = build_index(&space, &config(5)).unwrap();
    let sequential: Vec<_> = (0..8)
        .map(|i| index.retrieve_with(WORDS[i], 5, 0.5).unwrap())
        .collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let index = &index;
                scope.spawn(move || index.retrieve_with(WORDS[i], 5, 0.5).unwrap())
            })
            .collect();
        for (i, handle) in handles.into_iter().enumerate() {
            assert_eq!(handle.join().unwrap(), sequential[i]);
        }
    });
}

#[test]
fn svd_dim_larger_than_the_corpus_is_rejected() {
    let err = build_index(&space_of(&THREE_DOCS), &config(4));
    assert!(matches!(err, Err(RetrievalError::SvdDimTooLarge { .. })));
}

#[test]
fn three_chunk_fixture_gets_three_projected_vectors() {
    let index = build_index(&space_of(&THREE_DOCS), &config(3)).unwrap();
    assert_eq!(index.len(), 3);
    assert_eq!(index.svd_dim(), 3);
    for i in 0..3 {
        assert_eq!(index.projected_vector(i).len(), 3);
    }
    for idf in index.dense_idf() {
        assert!(idf.is_finite() && *idf >= 0.0);
    }
}
