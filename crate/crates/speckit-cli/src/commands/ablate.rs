//! `speckit ablate`: the evaluation at several retrieval context sizes.

use std::path::PathBuf;

use anyhow::{Context, Result};
use serde_json::json;

use speckit_core::bench::{
    ablation_summary, load_tasks, run_ablation, write_report_json, EvalOptions, EvidenceMode,
};

use crate::commands::eval::{load_handles, parse_count_check};
use crate::config::{ensure_out_dir, pipeline_for, RetrievalArgs, TransportArgs};
use crate::manifest::RunManifest;
use crate::UsageError;

#[derive(Debug, clap::Args)]
pub struct AblateArgs {
    /// Task file (JSON lines).
    #[arg(long)]
    pub tasks: PathBuf,
    /// Keep only this stage.
    #[arg(long)]
    pub stage: Option<u8>,
    /// Output directory for `ablation_k<k>.json` files.
    #[arg(long)]
    pub out: PathBuf,
    /// Hybrid index directory.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// KG-block index directory.
    #[arg(long)]
    pub kg_index: Option<PathBuf>,
    /// Pipeline preset (must retrieve): rag or full.
    #[arg(long, default_value = "full")]
    pub pipeline: String,
    /// Comma-separated retrieval context sizes, e.g. `6,8`.
    #[arg(long)]
    pub k_list: String,
    /// Demand exact evidence-set equality instead of the completeness rule.
    #[arg(long)]
    pub strict_evidence: bool,
    /// Official count validation: off, warn, or error.
    #[arg(long, default_value = "warn")]
    pub count_check: String,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
}

pub fn run(args: AblateArgs, transport: &TransportArgs) -> Result<()> {
    let k_values: Vec<usize> = args
        .k_list
        .split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<usize>()
                .map_err(|_| UsageError(format!("bad k value {piece:?} in --k-list")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if k_values.is_empty() {
        return Err(UsageError("--k-list must name at least one k".to_string()).into());
    }

    let file = transport.file_config()?;
    let gateway = transport.build_gateway(&file)?;
    let retrieval = args.retrieval.build(&file)?;
    let config = pipeline_for(&args.pipeline, retrieval, gateway.mode())?;
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

    let reports = run_ablation(
        &outcome.tasks,
        &k_values,
        &config,
        &handles,
        &gateway,
        options,
    )?;

    ensure_out_dir(&args.out)?;
    let mut manifest = RunManifest::new(
        "ablate",
        json!({
            "pipeline": args.pipeline,
            "k_list": k_values,
            "config": serde_json::to_value(&config)?,
            "stage": args.stage,
        }),
    );
    manifest.add_input(&args.tasks)?;
    for (k, report) in &reports {
        let path = args.out.join(format!("ablation_k{k}.json"));
        write_report_json(report, &path)?;
        manifest.add_output(&path)?;
        manifest.retrieval_calls += report.aggregates.retrieval_calls;
    }
    manifest.gateway_calls = gateway.call_count();
    manifest.write(&args.out)?;

    print!("{}", ablation_summary(&reports));
    println!(
        "wrote {} ablation report(s) to {}",
        reports.len(),
        args.out.display()
    );
    Ok(())
}
