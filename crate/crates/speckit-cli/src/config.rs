//! Config file handling and gateway construction shared by the commands.
//!
//! A JSON config file supplies defaults; command-line flags override it.
//! Documented keys: `alpha`, `k`, `bm25_k1`, `bm25_b`, `svd_dim`,
//! `kinds`, `transport`, `record_source`, `model_name`, `pipeline`,
//! `strip_patterns`, `granularity`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use speckit_core::bench::PipelineConfig;
use speckit_core::corpus::{Granularity, NormalizeConfig};
use speckit_core::gateway::{Gateway, MockRule, RecordSource, TransportMode};
use speckit_core::prompts::PromptSet;
use speckit_core::retrieval::{RetrievalConfig, SvdDim};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub bm25_k1: Option<f64>,
    pub bm25_b: Option<f64>,
    pub svd_dim: Option<usize>,
    pub kinds: Option<Vec<String>>,
    pub transport: Option<String>,
    pub record_source: Option<String>,
    pub model_name: Option<String>,
    pub pipeline: Option<String>,
    pub strip_patterns: Option<Vec<String>>,
    pub granularity: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let raw = fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                serde_json::from_str(&raw)
                    .with_context(|| format!("parsing config file {}", path.display()))
            }
        }
    }
}

/// Shared model/transport flags accepted by every model-touching command.
#[derive(Debug, Clone, clap::Args)]
pub struct TransportArgs {
    /// Transport mode: live, record, replay, or mock.
    #[arg(long, global = true)]
    pub transport: Option<TransportMode>,
    /// Cache directory for record/replay transports.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// What record mode wraps: live (default) or mock.
    #[arg(long, global = true)]
    pub record_source: Option<String>,
    /// JSON file of scripted mock rules ([{"if_contains", "respond"}]).
    #[arg(long, global = true)]
    pub mock_script: Option<PathBuf>,
    /// Model identifier for live/record requests.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Directory of prompt template overrides.
    #[arg(long, global = true)]
    pub prompts: Option<PathBuf>,
    /// JSON config file supplying defaults for all of the above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

impl TransportArgs {
    pub fn file_config(&self) -> Result<FileConfig> {
        FileConfig::load(self.config.as_ref())
    }

    pub fn transport_mode(&self, file: &FileConfig) -> Result<TransportMode> {
        if let Some(mode) = self.transport {
            return Ok(mode);
        }
        match file.transport.as_deref() {
            Some(raw) => raw.parse().map_err(anyhow::Error::msg),
            None => Ok(TransportMode::Mock),
        }
    }

    pub fn build_gateway(&self, file: &FileConfig) -> Result<Gateway> {
        let mode = self.transport_mode(file)?;
        let mut gateway = match mode {
            TransportMode::Mock => Gateway::mock(),
            TransportMode::Live => Gateway::live(),
            TransportMode::Replay => {
                let dir = self.cache_dir.clone().ok_or_else(|| {
                    anyhow::anyhow!("--cache-dir is required for replay transport")
                })?;
                Gateway::replay(&dir)
            }
            TransportMode::Record => {
                let dir = self.cache_dir.clone().ok_or_else(|| {
                    anyhow::anyhow!("--cache-dir is required for record transport")
                })?;
                let source = match self
                    .record_source
                    .as_deref()
                    .or(file.record_source.as_deref())
                {
                    None | Some("live") => RecordSource::Live,
                    Some("mock") => RecordSource::Mock,
                    Some(other) => bail!("unknown record source {other:?}"),
                };
                Gateway::record(&dir, source)
            }
        };
        if let Some(model) = self.model.as_deref().or(file.model_name.as_deref()) {
            gateway = gateway.with_model_name(model);
        }
        if let Some(dir) = &self.prompts {
            gateway = gateway.with_prompts(
                PromptSet::from_dir(dir)
                    .with_context(|| format!("loading prompts from {}", dir.display()))?,
            );
        }
        if let Some(script) = &self.mock_script {
            let raw = fs::read_to_string(script)
                .with_context(|| format!("reading mock script {}", script.display()))?;
            let rules: Vec<MockRule> = serde_json::from_str(&raw)
                .with_context(|| format!("parsing mock script {}", script.display()))?;
            gateway = gateway.with_mock_rules(rules);
        }
        Ok(gateway)
    }
}

/// Retrieval flags accepted by index/query/eval/ablate.
#[derive(Debug, Clone, clap::Args)]
pub struct RetrievalArgs {
    /// Sparse/dense fusion weight in [0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Evidence budget (top-k).
    #[arg(long)]
    pub k: Option<usize>,
    /// BM25 k1 parameter.
    #[arg(long)]
    pub bm25_k1: Option<f64>,
    /// BM25 b parameter.
    #[arg(long)]
    pub bm25_b: Option<f64>,
    /// Exact truncated-SVD dimensionality (defaults to auto, capped at 256).
    #[arg(long)]
    pub svd_dim: Option<usize>,
}

impl RetrievalArgs {
    pub fn build(&self, file: &FileConfig) -> Result<RetrievalConfig> {
        let mut cfg = RetrievalConfig::default();
        if let Some(alpha) = self.alpha.or(file.alpha) {
            cfg.alpha = alpha;
        }
        if let Some(k) = self.k.or(file.k) {
            cfg.k = k;
        }
        if let Some(k1) = self.bm25_k1.or(file.bm25_k1) {
            cfg.bm25_k1 = k1;
        }
        if let Some(b) = self.bm25_b.or(file.bm25_b) {
            cfg.bm25_b = b;
        }
        if let Some(dim) = self.svd_dim.or(file.svd_dim) {
            cfg.svd_dim = SvdDim::Exact(dim);
        }
        if let Some(kinds) = &file.kinds {
            cfg.kinds = kinds
                .iter()
                .map(|raw| {
                    speckit_core::corpus::ComponentKind::parse(raw)
                        .ok_or_else(|| anyhow::anyhow!("unknown component kind {raw:?}"))
                })
                .collect::<Result<Vec<_>>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Pipeline preset names from the evaluation tables.
pub fn pipeline_for(
    preset: &str,
    retrieval: RetrievalConfig,
    transport: TransportMode,
) -> Result<PipelineConfig> {
    let mut config = PipelineConfig {
        use_fusion: false,
        use_rag: false,
        use_kg: false,
        retrieval,
        transport,
    };
    match preset {
        "base" => {}
        "fusion" => config.use_fusion = true,
        "rag" => {
            config.use_fusion = true;
            config.use_rag = true;
        }
        "full" => {
            config.use_fusion = true;
            config.use_rag = true;
            config.use_kg = true;
        }
        other => bail!("unknown pipeline preset {other:?} (base, fusion, rag, full)"),
    }
    config.validate()?;
    Ok(config)
}

pub fn normalize_config(file: &FileConfig) -> NormalizeConfig {
    let mut cfg = NormalizeConfig::default();
    if let Some(patterns) = &file.strip_patterns {
        cfg.strip_patterns = patterns.clone();
    }
    cfg
}

pub fn granularity_of(raw: Option<&str>, file: &FileConfig) -> Result<Granularity> {
    let value = raw.or(file.granularity.as_deref()).unwrap_or("paragraph");
    value.parse().map_err(anyhow::Error::msg)
}

pub fn ensure_out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}
