//! `speckit eval`: benchmark run under a pipeline preset.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::json;

use speckit_core::bench::{
    load_tasks, run_eval, write_report_csv, write_report_json, CountCheck, EvalOptions, EvalReport,
    EvidenceMode, IndexHandles, PipelineConfig,
};
use speckit_core::gateway::Gateway;
use speckit_core::retrieval::HybridIndex;

use crate::config::{ensure_out_dir, pipeline_for, RetrievalArgs, TransportArgs};
use crate::manifest::RunManifest;
use crate::UsageError;

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Task file (JSON lines).
    #[arg(long)]
    pub tasks: PathBuf,
    /// Keep only this stage.
    #[arg(long)]
    pub stage: Option<u8>,
    /// Output directory for report.json, report.csv, manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Hybrid index directory (required when the pipeline retrieves).
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// KG-block index directory (required for the full pipeline).
    #[arg(long)]
    pub kg_index: Option<PathBuf>,
    /// Pipeline preset: base, fusion, rag, or full.
    #[arg(long, default_value = "full")]
    pub pipeline: String,
    /// Shorthand for --pipeline base.
    #[arg(long)]
    pub base: bool,
    /// Demand exact evidence-set equality instead of the completeness rule.
    #[arg(long)]
    pub strict_evidence: bool,
    /// Official count validation: off, warn, or error.
    #[arg(long, default_value = "warn")]
    pub count_check: String,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
}

pub(crate) fn parse_count_check(raw: &str) -> Result<CountCheck> {
    match raw {
        "off" => Ok(CountCheck::Off),
        "warn" => Ok(CountCheck::Warn),
        "error" => Ok(CountCheck::Error),
        other => Err(UsageError(format!("unknown count-check mode {other:?}")).into()),
    }
}

pub(crate) fn load_handles(
    config: &PipelineConfig,
    index: Option<&PathBuf>,
    kg_index: Option<&PathBuf>,
) -> Result<IndexHandles> {
    let mut handles = IndexHandles::none();
    if config.use_rag {
        let dir = index
            .ok_or_else(|| UsageError("this pipeline retrieves; supply --index".to_string()))?;
        handles.chunk_index = Some(
            HybridIndex::load(dir).with_context(|| format!("loading index {}", dir.display()))?,
        );
    }
    if config.use_kg {
        let dir = kg_index.ok_or_else(|| {
            UsageError("this pipeline uses KG evidence; supply --kg-index".to_string())
        })?;
        handles.kg_index = Some(
            HybridIndex::load(dir)
                .with_context(|| format!("loading kg index {}", dir.display()))?,
        );
    }
    Ok(handles)
}

pub(crate) fn summarize(report: &EvalReport) {
    let a = &report.aggregates;
    let fmt = |rate: Option<f64>| match rate {
        Some(rate) => format!("{:.4}", rate),
        None => "-".to_string(),
    };
    println!(
        "tasks {} | accuracy {} | score2 {} | evidence {} | binary-f1 {} | micro {} | macro {} | ev+expl {}",
        a.task_count,
        fmt(a.accuracy),
        fmt(a.score2_rate),
        fmt(a.evidence_correct_rate),
        fmt(a.binary_f1),
        fmt(a.micro_f1),
        fmt(a.macro_f1),
        fmt(a.evidence_explanation_correct_rate),
    );
    if a.unscored > 0 || a.errors > 0 {
        eprintln!(
            "note: {} unscored task(s), {} task(s) with errors",
            a.unscored, a.errors
        );
        for row in report.rows.iter().filter(|r| r.error.is_some()).take(5) {
            eprintln!("  {}: {}", row.task_id, row.error.as_deref().unwrap_or(""));
        }
    }
}

pub(crate) fn write_reports(report: &EvalReport, out: &Path) -> Result<(PathBuf, PathBuf)> {
    let json_path = out.join("report.json");
    let csv_path = out.join("report.csv");
    write_report_json(report, &json_path)?;
    write_report_csv(report, &csv_path)?;
    Ok((json_path, csv_path))
}

pub fn run(args: EvalArgs, transport: &TransportArgs) -> Result<()> {
    let file = transport.file_config()?;
    let gateway: Gateway = transport.build_gateway(&file)?;
    let retrieval = args.retrieval.build(&file)?;
    let preset = if args.base {
        "base"
    } else {
        args.pipeline.as_str()
    };
    let config = pipeline_for(preset, retrieval, gateway.mode())?;
    let count_check = parse_count_check(&args.count_check)?;

    let outcome = load_tasks(&args.tasks, args.stage, count_check)
        .with_context(|| format!("loading tasks from {}", args.tasks.display()))?;
    for warning in &outcome.warnings {
        eprintln!("count check: {warning}");
    }
    let handles = load_handles(&config, args.index.as_ref(), args.kg_index.as_ref())?;
    let options = EvalOptions {
        evidence_mode: if args.strict_evidence {
            EvidenceMode::Exact
        } else {
            EvidenceMode::Superset
        },
    };

    let report = run_eval(&outcome.tasks, &config, &handles, &gateway, options)?;

    ensure_out_dir(&args.out)?;
    let (json_path, csv_path) = write_reports(&report, &args.out)?;

    let mut manifest = RunManifest::new(
        "eval",
        json!({
            "pipeline": preset,
            "config": serde_json::to_value(&config)?,
            "stage": args.stage,
            "strict_evidence": args.strict_evidence,
            "model_name": gateway.model_name(),
        }),
    );
    manifest.add_input(&args.tasks)?;
    manifest.add_output(&json_path)?;
    manifest.add_output(&csv_path)?;
    manifest.retrieval_calls = report.aggregates.retrieval_calls;
    manifest.gateway_calls = gateway.call_count();
    manifest.write(&args.out)?;

    summarize(&report);
    println!("wrote {}", json_path.display());
    Ok(())
}
