//! End-to-end pipeline over a miniature specification: ingest, index,
//! clause graphs, evaluation, and record/replay determinism.

use std::collections::BTreeSet;
use std::fs;

use speckit_core::bench::{
    load_tasks, run_ablation, run_eval, write_report_json, CountCheck, EvalOptions, Family,
    IndexHandles, PipelineConfig, TaskInstance,
};
use speckit_core::corpus::{
    assemble_component_space, normalize_document, Granularity, NormalizeConfig,
};
use speckit_core::gateway::{Gateway, GatewayError, ModelRequest, RecordSource, TransportMode};
use speckit_core::retrieval::{build_index, HybridIndex, RetrievalConfig};
use speckit_core::specgraph::{build_kg_space, extract_graph, render_kg_block};

const MINI_SPEC: &str = "\
5.4.2 Security mode control procedure
The security mode control procedure establishes NAS integrity protection. \
The AMF initiates the SECURITY MODE COMMAND message during registration and \
NAS integrity is established when the UE replies.

5.5.1 Registration procedure
For emergency registration the UE initiates the registration procedure by \
sending a REGISTRATION REQUEST message. The AMF may accept the request \
before NAS integrity is established for emergency services.

5.5.2.2 UE-initiated De-registration procedure
The UE-initiated De-registration procedure is initiated by the UE sending a \
DEREGISTRATION REQUEST message. The De-registration Type IE indicates the \
switch-off case. Execution of the procedure starts timer T3521 and requires \
the UE to be in the 5GMM-DEREGISTERED state. The DEREGISTRATION REQUEST \
message may be sent without integrity protection.

9.11.3 Mobility management information elements
Coding of information elements used by the mobility management messages.
";

fn mini_space() -> speckit_core::corpus::ComponentSpace {
    let doc = normalize_document(
        MINI_SPEC.as_bytes(),
        "TS 24.501",
        &NormalizeConfig::default(),
    )
    .unwrap();
    assemble_component_space(&[doc], &Gateway::mock(), Granularity::Paragraph).unwrap()
}

fn build_handles(gateway: &Gateway) -> IndexHandles {
    let space = mini_space();
    let cfg = RetrievalConfig::default();
    let chunk_index = build_index(&space, &cfg).unwrap();

    let mut clauses: Vec<String> = space
        .components
        .iter()
        .map(|c| c.clause_id.clone())
        .collect();
    clauses.sort();
    clauses.dedup();
    let mut blocks = Vec::new();
    for clause_id in clauses {
        let components: Vec<_> = space
            .components
            .iter()
            .filter(|c| c.clause_id == clause_id)
            .cloned()
            .collect();
        let graph = extract_graph(&components, gateway).unwrap();
        let original: String = components
            .iter()
            .map(|c| c.content.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        blocks.push(render_kg_block(&graph, &original).unwrap());
    }
    let kg_space = build_kg_space(&blocks);
    let kg_index = build_index(&kg_space, &RetrievalConfig::default()).unwrap();

    IndexHandles {
        chunk_index: Some(chunk_index),
        kg_index: Some(kg_index),
    }
}

fn task(
    task_id: &str,
    stage: u8,
    family: Family,
    question: &str,
    gold_answer: &str,
    gold_evidence: &[&str],
) -> TaskInstance {
    TaskInstance {
        task_id: task_id.to_string(),
        stage,
        family,
        question: question.to_string(),
        options: None,
        gold_answer: Some(gold_answer.to_string()),
        gold_evidence: gold_evidence.iter().map(|s| s.to_string()).collect(),
        gold_binary: None,
        gold_categories: None,
        sentence: None,
    }
}

fn fixture_tasks() -> Vec<TaskInstance> {
    let mut ccqa = task(
        "ccqa-001",
        3,
        Family::Ccqa,
        "During Emergency Registration, when is NAS integrity established?",
        "NAS integrity is established by the security mode control procedure \
         initiated by the AMF during registration.",
        &["TS 24.501, Clause 5.5.1", "TS 24.501, Clause 5.4.2"],
    );
    ccqa.gold_evidence = ccqa.gold_evidence.iter().cloned().collect();

    let mut mcqa = task(
        "mcqa-001",
        2,
        Family::McqaE,
        "Which procedure establishes NAS integrity protection?",
        "B",
        &["TS 24.501, Clause 5.4.2"],
    );
    mcqa.options = Some(vec![
        "The registration procedure".to_string(),
        "The security mode control procedure".to_string(),
        "The de-registration procedure".to_string(),
    ]);

    let label_positive = TaskInstance {
        task_id: "label-001".to_string(),
        stage: 3,
        family: Family::Label,
        question: String::new(),
        options: None,
        gold_answer: None,
        gold_evidence: ["TS 24.501, Clause 5.5.2.2".to_string()]
            .into_iter()
            .collect(),
        gold_binary: Some(true),
        gold_categories: Some(
            [speckit_core::bench::VulnCategory::Spoofing]
                .into_iter()
                .collect(),
        ),
        sentence: Some(
            "The DEREGISTRATION REQUEST message may be sent without integrity protection."
                .to_string(),
        ),
    };
    let label_negative = TaskInstance {
        task_id: "label-002".to_string(),
        stage: 3,
        family: Family::Label,
        question: String::new(),
        options: None,
        gold_answer: None,
        gold_evidence: BTreeSet::new(),
        gold_binary: Some(false),
        gold_categories: None,
        sentence: Some("The UE shall start timer T3521 when the procedure begins.".to_string()),
    };

    vec![ccqa, mcqa, label_positive, label_negative]
}

#[test]
fn base_configuration_issues_zero_retrieval_calls() {
    let gateway = Gateway::mock();
    let handles = build_handles(&gateway);
    let config = PipelineConfig::base(TransportMode::Mock);
    let report = run_eval(
        &fixture_tasks(),
        &config,
        &handles,
        &gateway,
        EvalOptions::default(),
    )
    .unwrap();
    assert_eq!(report.aggregates.retrieval_calls, 0);
    assert_eq!(handles.query_count(), 0);
}

#[test]
fn full_pipeline_retrieves_and_cites_for_every_evidence_task() {
    let gateway = Gateway::mock();
    let handles = build_handles(&gateway);
    let config = PipelineConfig::full(TransportMode::Mock);
    let report = run_eval(
        &fixture_tasks(),
        &config,
        &handles,
        &gateway,
        EvalOptions::default(),
    )
    .unwrap();
    assert!(report.aggregates.retrieval_calls >= 4);
    for row in &report.rows {
        assert!(row.error.is_none(), "{}: {:?}", row.task_id, row.error);
        assert!(
            row.retrieval_calls >= 1,
            "{} made no retrieval call",
            row.task_id
        );
        // Negative controls correctly cite nothing; everything else must
        // produce a citation list.
        if row.gold_binary == Some(false) {
            assert!(row.citations.is_empty(), "{} cited spuriously", row.task_id);
        } else {
            assert!(!row.citations.is_empty(), "{} cited nothing", row.task_id);
        }
    }
    assert!(handles.query_count() >= 4);
}

#[test]
fn ccqa_under_full_pipeline_cites_at_least_two_clauses() {
    let gateway = Gateway::mock();
    let handles = build_handles(&gateway);
    let config = PipelineConfig::full(TransportMode::Mock);
    let tasks = vec![fixture_tasks().remove(0)];
    let report = run_eval(&tasks, &config, &handles, &gateway, EvalOptions::default()).unwrap();
    let row = &report.rows[0];
    assert!(!row.prediction.is_empty());
    let distinct_clauses: BTreeSet<&String> = row.citations.iter().collect();
    assert!(
        distinct_clauses.len() >= 2,
        "expected >= 2 distinct citations, got {:?}",
        row.citations
    );
}

#[test]
fn record_then_replay_is_byte_identical_and_misses_are_errors() {
    let cache = tempfile::tempdir().unwrap();
    let tasks = fixture_tasks();
    let config = PipelineConfig::full(TransportMode::Record);

    // Record once against the mock rules.
    let recorder = Gateway::record(cache.path(), RecordSource::Mock);
    let handles = build_handles(&recorder);
    run_eval(&tasks, &config, &handles, &recorder, EvalOptions::default()).unwrap();

    // Replay twice and under a task-order shuffle; all three reports must
    // serialize to identical bytes.
    let mut bodies = Vec::new();
    for shuffle in [false, true, true] {
        let replayer = Gateway::replay(cache.path());
        let handles = build_handles(&replayer);
        let mut run_tasks = tasks.clone();
        if shuffle {
            run_tasks.reverse();
        }
        let report = run_eval(
            &run_tasks,
            &PipelineConfig::full(TransportMode::Replay),
            &handles,
            &replayer,
            EvalOptions::default(),
        )
        .unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        write_report_json(&report, file.path()).unwrap();
        bodies.push(fs::read(file.path()).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[0], bodies[2]);

    // An unseen request must be a replay miss, not a network call.
    let replayer = Gateway::replay(cache.path());
    let err = replayer.complete(&ModelRequest::new("m", "", "definitely unseen", 64));
    assert!(matches!(err, Err(GatewayError::ReplayMiss(_))));
}

#[test]
fn ablation_produces_one_report_per_k_and_duplicates_match() {
    let gateway = Gateway::mock();
    let handles = build_handles(&gateway);
    let config = PipelineConfig::full(TransportMode::Mock);
    let reports = run_ablation(
        &fixture_tasks(),
        &[6, 8, 8],
        &config,
        &handles,
        &gateway,
        EvalOptions::default(),
    )
    .unwrap();
    assert_eq!(reports.len(), 3);
    assert_eq!(reports[0].0, 6);
    assert_eq!(reports[1].0, 8);
    assert_eq!(reports[1].1, reports[2].1, "duplicate k must be identical");

    let base = PipelineConfig::base(TransportMode::Mock);
    assert!(run_ablation(
        &fixture_tasks(),
        &[6, 8],
        &base,
        &handles,
        &gateway,
        EvalOptions::default(),
    )
    .is_err());
}

#[test]
fn task_files_round_trip_through_jsonl() {
    let tasks = fixture_tasks();
    let mut body = String::new();
    for task in &tasks {
        body.push_str(&serde_json::to_string(task).unwrap());
        body.push('\n');
    }
    let file = tempfile::NamedTempFile::new().unwrap();
    fs::write(file.path(), &body).unwrap();
    let outcome = load_tasks(file.path(), None, CountCheck::Off).unwrap();
    assert_eq!(outcome.tasks, tasks);
    let stage3 = load_tasks(file.path(), Some(3), CountCheck::Off).unwrap();
    assert_eq!(stage3.tasks.len(), 3);
}

#[test]
fn mini_space_statistics_survive_serialization() {
    let space = mini_space();
    assert_eq!(space.stats, speckit_core::corpus::verify_stats(&space));
    let file = tempfile::NamedTempFile::new().unwrap();
    speckit_core::corpus::write_component_space(&space, file.path()).unwrap();
    let loaded = speckit_core::corpus::read_component_space(file.path()).unwrap();
    assert_eq!(space, loaded);

    // Determinism of the serialized space.
    let file2 = tempfile::NamedTempFile::new().unwrap();
    speckit_core::corpus::write_component_space(&mini_space(), file2.path()).unwrap();
    assert_eq!(
        fs::read(file.path()).unwrap(),
        fs::read(file2.path()).unwrap()
    );
}

#[test]
fn kg_index_and_chunk_index_persist_side_by_side() {
    let gateway = Gateway::mock();
    let handles = build_handles(&gateway);
    let dir = tempfile::tempdir().unwrap();
    handles
        .chunk_index
        .as_ref()
        .unwrap()
        .save(&dir.path().join("chunks"))
        .unwrap();
    handles
        .kg_index
        .as_ref()
        .unwrap()
        .save(&dir.path().join("kg"))
        .unwrap();
    let chunk_index = HybridIndex::load(&dir.path().join("chunks")).unwrap();
    let kg_index = HybridIndex::load(&dir.path().join("kg")).unwrap();
    assert_eq!(
        chunk_index.len(),
        handles.chunk_index.as_ref().unwrap().len()
    );
    assert_eq!(kg_index.len(), handles.kg_index.as_ref().unwrap().len());
}
