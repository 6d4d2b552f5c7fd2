//! `speckit ingest`: corpus directory -> component space JSONL.

use std::path::PathBuf;

use anyhow::{Context, Result};
use serde_json::json;

use speckit_core::corpus::{assemble_component_space, read_corpus_dir, write_component_space};

use crate::config::{ensure_out_dir, granularity_of, normalize_config, TransportArgs};
use crate::manifest::{digest_dir, RunManifest};

#[derive(Debug, clap::Args)]
pub struct IngestArgs {
    /// Corpus directory: `<spec_id>/document.txt` plus table/figure sidecars.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output directory for `space.jsonl` and `manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Text chunk granularity: paragraph (default) or sentence.
    #[arg(long)]
    pub granularity: Option<String>,
}

pub fn run(args: IngestArgs, transport: &TransportArgs) -> Result<()> {
    let file = transport.file_config()?;
    let gateway = transport.build_gateway(&file)?;
    let normalize_cfg = normalize_config(&file);
    let granularity = granularity_of(args.granularity.as_deref(), &file)?;

    // Validate and assemble everything before any output file exists.
    let documents = read_corpus_dir(&args.corpus, &normalize_cfg)
        .with_context(|| format!("loading corpus from {}", args.corpus.display()))?;
    let space = assemble_component_space(&documents, &gateway, granularity)?;

    ensure_out_dir(&args.out)?;
    let space_path = args.out.join("space.jsonl");
    write_component_space(&space, &space_path)?;

    let mut manifest = RunManifest::new(
        "ingest",
        json!({
            "granularity": format!("{granularity:?}").to_lowercase(),
            "transport": gateway.mode().to_string(),
            "strip_patterns": normalize_cfg.strip_patterns,
            "model_name": gateway.model_name(),
        }),
    );
    digest_dir(&mut manifest, &args.corpus, false)?;
    manifest.add_output(&space_path)?;
    manifest.gateway_calls = gateway.call_count();
    manifest.write(&args.out)?;

    println!(
        "ingested {} spec(s): {} components ({} paragraphs, {} sentences, {} tables, {} figures)",
        space.spec_ids.len(),
        space.components.len(),
        space.stats.paragraphs,
        space.stats.sentences,
        space.stats.tables,
        space.stats.figures,
    );
    println!("wrote {}", space_path.display());
    Ok(())
}
