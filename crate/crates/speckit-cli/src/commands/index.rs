//! `speckit index`: component space -> hybrid index directory.

use std::path::PathBuf;

use anyhow::{Context, Result};

use speckit_core::corpus::read_component_space;
use speckit_core::retrieval::build_index;

use crate::config::{ensure_out_dir, RetrievalArgs, TransportArgs};
use crate::manifest::{digest_dir, RunManifest};

#[derive(Debug, clap::Args)]
pub struct IndexArgs {
    /// Component space file produced by `ingest`.
    #[arg(long)]
    pub space: PathBuf,
    /// Output index directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
}

pub fn run(args: IndexArgs, transport: &TransportArgs) -> Result<()> {
    let file = transport.file_config()?;
    let config = args.retrieval.build(&file)?;

    let space = read_component_space(&args.space)
        .with_context(|| format!("loading component space {}", args.space.display()))?;
    let index = build_index(&space, &config)?;

    ensure_out_dir(&args.out)?;
    index.save(&args.out)?;

    let mut manifest = RunManifest::new("index", serde_json::to_value(&config)?);
    manifest.add_input(&args.space)?;
    digest_dir(&mut manifest, &args.out, true)?;
    manifest.write(&args.out)?;

    println!(
        "indexed {} chunks over {} terms (svd dim {})",
        index.len(),
        index.vocab().len(),
        index.svd_dim()
    );
    println!("wrote {}", args.out.display());
    Ok(())
}
