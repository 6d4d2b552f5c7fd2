//! `speckit report`: re-emit a stored report.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};

use speckit_core::bench::{write_report_csv, write_report_json, EvalReport};

use crate::config::ensure_out_dir;
use crate::UsageError;

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    /// Stored report.json to re-emit.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Format to emit: json, csv, or both.
    #[arg(long, default_value = "both")]
    pub format: String,
}

pub fn run(args: ReportArgs) -> Result<()> {
    let raw = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let report: EvalReport =
        serde_json::from_str(&raw).with_context(|| format!("parsing {}", args.input.display()))?;
    ensure_out_dir(&args.out)?;
    match args.format.as_str() {
        "json" => write_report_json(&report, &args.out.join("report.json"))?,
        "csv" => write_report_csv(&report, &args.out.join("report.csv"))?,
        "both" => {
            write_report_json(&report, &args.out.join("report.json"))?;
            write_report_csv(&report, &args.out.join("report.csv"))?;
        }
        other => return Err(UsageError(format!("unknown format {other:?}")).into()),
    }
    println!(
        "re-emitted {} to {}",
        args.input.display(),
        args.out.display()
    );
    Ok(())
}
