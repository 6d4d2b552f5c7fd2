//! `speckit` — reproducible ingestion, retrieval, clause graphs, and
//! benchmark evaluation over 3GPP-style specifications.
//!
//! Exit codes: 0 success, 2 usage, 3 data/schema, 4 gateway/network.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use speckit_core::bench::BenchError;
use speckit_core::corpus::CorpusError;
use speckit_core::gateway::GatewayError;
use speckit_core::specgraph::GraphError;

#[derive(Parser)]
#[command(
    name = "speckit",
    version,
    about = "Deterministic analysis toolkit for 3GPP-style technical specifications"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    transport: config::TransportArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a corpus directory into a unified component space.
    Ingest(commands::ingest::IngestArgs),
    /// Build the hybrid retrieval index over a component space.
    Index(commands::index::IndexArgs),
    /// Extract clause knowledge graphs and build the KG-block index.
    Kg(commands::kg::KgArgs),
    /// Answer one question with retrieved, cited evidence.
    Query(commands::query::QueryArgs),
    /// Run the benchmark tasks under a pipeline configuration.
    Eval(commands::eval::EvalArgs),
    /// Run the evaluation at several retrieval context sizes.
    Ablate(commands::ablate::AblateArgs),
    /// Re-emit a stored report in another format.
    Report(commands::report::ReportArgs),
}

/// Errors that are the caller's fault (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => commands::ingest::run(args, &cli.transport),
        Command::Index(args) => commands::index::run(args, &cli.transport),
        Command::Kg(args) => commands::kg::run(args, &cli.transport),
        Command::Query(args) => commands::query::run(args, &cli.transport),
        Command::Eval(args) => commands::eval::run(args, &cli.transport),
        Command::Ablate(args) => commands::ablate::run(args, &cli.transport),
        Command::Report(args) => commands::report::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        let gateway_related = cause.downcast_ref::<GatewayError>().is_some()
            || matches!(
                cause.downcast_ref::<CorpusError>(),
                Some(CorpusError::Gateway(_))
            )
            || matches!(
                cause.downcast_ref::<GraphError>(),
                Some(GraphError::Gateway(_))
            )
            || matches!(
                cause.downcast_ref::<BenchError>(),
                Some(BenchError::Gateway(_))
            );
        if gateway_related {
            return 4;
        }
    }
    3
}
