//! `speckit kg`: component space -> clause graph store + KG-block index.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde_json::json;

use speckit_core::corpus::{read_component_space, ComponentKind, SpecComponent};
use speckit_core::retrieval::build_index;
use speckit_core::specgraph::{build_kg_space, extract_graph, render_kg_block, save_graph};

use crate::config::{ensure_out_dir, RetrievalArgs, TransportArgs};
use crate::manifest::{digest_dir, RunManifest};

#[derive(Debug, clap::Args)]
pub struct KgArgs {
    /// Component space file produced by `ingest`.
    #[arg(long)]
    pub space: PathBuf,
    /// Output directory for `kg/` (graph store) and `kg_index/`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub retrieval: RetrievalArgs,
}

pub fn run(args: KgArgs, transport: &TransportArgs) -> Result<()> {
    let file = transport.file_config()?;
    let gateway = transport.build_gateway(&file)?;
    let retrieval_config = args.retrieval.build(&file)?;

    let space = read_component_space(&args.space)
        .with_context(|| format!("loading component space {}", args.space.display()))?;

    // One graph per clause, in deterministic clause order.
    let mut by_clause: BTreeMap<(String, String), Vec<SpecComponent>> = BTreeMap::new();
    for component in &space.components {
        by_clause
            .entry((component.spec_id.clone(), component.clause_id.clone()))
            .or_default()
            .push(component.clone());
    }

    let mut graphs = Vec::new();
    let mut blocks = Vec::new();
    for ((spec_id, clause_id), components) in &by_clause {
        let graph = extract_graph(components, &gateway)
            .with_context(|| format!("extracting graph for {spec_id} clause {clause_id}"))?;
        let original: Vec<&str> = components
            .iter()
            .filter(|c| c.kind == ComponentKind::Text)
            .map(|c| c.content.as_str())
            .collect();
        let original = if original.is_empty() {
            components
                .iter()
                .map(|c| c.content.as_str())
                .collect::<Vec<_>>()
                .join("\n")
        } else {
            original.join("\n")
        };
        blocks.push(render_kg_block(&graph, &original)?);
        graphs.push(graph);
    }

    ensure_out_dir(&args.out)?;
    let store_dir = args.out.join("kg");
    for graph in &graphs {
        save_graph(&store_dir, graph)?;
    }
    let kg_space = build_kg_space(&blocks);
    let kg_index = build_index(&kg_space, &retrieval_config)?;
    let index_dir = args.out.join("kg_index");
    kg_index.save(&index_dir)?;

    let mut manifest = RunManifest::new(
        "kg",
        json!({
            "retrieval": serde_json::to_value(&retrieval_config)?,
            "transport": gateway.mode().to_string(),
            "model_name": gateway.model_name(),
        }),
    );
    manifest.add_input(&args.space)?;
    digest_dir(&mut manifest, &args.out, true)?;
    manifest.gateway_calls = gateway.call_count();
    manifest.write(&args.out)?;

    println!(
        "extracted {} clause graph(s); kg index holds {} block(s)",
        graphs.len(),
        kg_index.len()
    );
    println!("wrote {} and {}", store_dir.display(), index_dir.display());
    Ok(())
}
