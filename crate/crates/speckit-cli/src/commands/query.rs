//! `speckit query`: one question in, an answer plus a CITATIONS block out.

use std::path::PathBuf;

use anyhow::{Context, Result};

use speckit_core::gateway::ContextPassage;
use speckit_core::retrieval::HybridIndex;
use speckit_core::specgraph::{kg_retrieve, merge_context};

use crate::config::TransportArgs;
use crate::UsageError;

#[derive(Debug, clap::Args)]
pub struct QueryArgs {
    /// Hybrid index directory produced by `index`.
    #[arg(long)]
    pub index: PathBuf,
    /// KG-block index directory produced by `kg` (with --with-kg).
    #[arg(long)]
    pub kg_index: Option<PathBuf>,
    /// The question to answer.
    #[arg(long)]
    pub question: String,
    /// Evidence budget override.
    #[arg(long)]
    pub k: Option<usize>,
    /// Fusion weight override.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Merge KG-block evidence into the context.
    #[arg(long)]
    pub with_kg: bool,
}

pub fn run(args: QueryArgs, transport: &TransportArgs) -> Result<()> {
    if args.question.trim().is_empty() {
        return Err(UsageError("--question must be non-empty".to_string()).into());
    }
    let file = transport.file_config()?;
    let gateway = transport.build_gateway(&file)?;

    let index = HybridIndex::load(&args.index)
        .with_context(|| format!("loading index {}", args.index.display()))?;
    let k = args.k.unwrap_or(index.config().k);
    let alpha = args.alpha.unwrap_or(index.config().alpha);

    let chunk_evidence = index.retrieve_with(&args.question, k, alpha)?;
    let context: Vec<ContextPassage> = if args.with_kg {
        let kg_dir = args
            .kg_index
            .as_ref()
            .ok_or_else(|| UsageError("--with-kg requires --kg-index".to_string()))?;
        let kg_index = HybridIndex::load(kg_dir)
            .with_context(|| format!("loading kg index {}", kg_dir.display()))?;
        let kg_evidence = kg_retrieve(&kg_index, &args.question)?;
        merge_context(&chunk_evidence, &kg_evidence, k)
            .into_iter()
            .map(|item| ContextPassage {
                label: item.label,
                content: item.content,
            })
            .collect()
    } else {
        chunk_evidence
            .items
            .iter()
            .map(|item| ContextPassage {
                label: item.label.clone(),
                content: item.content.clone(),
            })
            .collect()
    };

    let (answer, citations) = gateway.answer_with_context(&args.question, &context, true)?;
    println!("{answer}");
    println!();
    println!("CITATIONS:");
    for label in &citations {
        println!("{label}");
    }
    Ok(())
}
