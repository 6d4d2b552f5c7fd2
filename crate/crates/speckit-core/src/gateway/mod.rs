//! Uniform access to a chat-completion model.
//!
//! Every pipeline and judge call goes through [`Gateway::complete`], which
//! dispatches on a [`TransportMode`]: `live` talks to the configured HTTP
//! endpoint, `record` performs the underlying call and persists the response
//! under its request hash, `replay` serves recorded responses and never
//! touches the network, and `mock` applies registered deterministic rules.
//!
//! Requests are always built at temperature 0; there is no public way to
//! construct one with any other value.

mod answer;
mod cache;
mod judge;
mod live;
mod mock;

pub use answer::{render_context, split_citations, ContextPassage};
pub use cache::{CacheEntry, ResponseCache};
pub use judge::parse_verdict;
pub use mock::{MockRule, MockTransport};

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompts::PromptSet;

/// Environment variable naming the chat-completion endpoint URL.
pub const ENDPOINT_ENV: &str = "SPECKIT_ENDPOINT";
/// Environment variable holding the API credential. Never written to disk.
pub const API_KEY_ENV: &str = "SPECKIT_API_KEY";

/// Default model identifier used when none is configured.
pub const DEFAULT_MODEL: &str = "deepseek-v3.2-exp";

/// Default output token budget.
pub const DEFAULT_MAX_OUTPUT: u32 = 2048;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("replay miss: no cached response for request hash {0}")]
    ReplayMiss(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("credential missing: set the {0} environment variable")]
    CredentialMissing(&'static str),
    #[error("transport mode {0} requires a cache directory")]
    MissingCacheDir(TransportMode),
    #[error("cache io error at {path}: {source}")]
    CacheIo { path: PathBuf, source: io::Error },
    #[error("unparseable judge verdict (no standalone 0/1/2 after a SCORE marker): {0:?}")]
    UnparseableVerdict(String),
    #[error("gold answer must be non-empty")]
    EmptyGoldAnswer,
}

/// A single chat-completion request.
///
/// `temperature` is private and fixed to 0 by [`ModelRequest::new`]; the
/// deserializer rejects any persisted request that claims otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RequestWire")]
pub struct ModelRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    temperature: f64,
    pub max_output: u32,
    pub model_name: String,
}

#[derive(Deserialize)]
struct RequestWire {
    system_prompt: String,
    user_prompt: String,
    temperature: f64,
    max_output: u32,
    model_name: String,
}

impl TryFrom<RequestWire> for ModelRequest {
    type Error = String;

    fn try_from(wire: RequestWire) -> Result<Self, Self::Error> {
        if wire.temperature != 0.0 {
            return Err(format!(
                "refusing request with temperature {} (must be 0)",
                wire.temperature
            ));
        }
        Ok(ModelRequest {
            system_prompt: wire.system_prompt,
            user_prompt: wire.user_prompt,
            temperature: 0.0,
            max_output: wire.max_output,
            model_name: wire.model_name,
        })
    }
}

impl ModelRequest {
    pub fn new(model_name: &str, system_prompt: &str, user_prompt: &str, max_output: u32) -> Self {
        Self {
            system_prompt: system_prompt.to_string(),
            user_prompt: user_prompt.to_string(),
            temperature: 0.0,
            max_output,
            model_name: model_name.to_string(),
        }
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

/// Stable content hash over all request fields.
///
/// Fields are length-prefixed and hashed in a fixed order, so the hash is
/// insensitive to how the request happens to be serialized elsewhere and is
/// stable across process restarts.
pub fn request_hash(req: &ModelRequest) -> String {
    let mut hasher = Sha256::new();
    for field in [
        req.model_name.as_bytes(),
        req.system_prompt.as_bytes(),
        req.user_prompt.as_bytes(),
    ] {
        hasher.update((field.len() as u64).to_le_bytes());
        hasher.update(field);
    }
    hasher.update(req.temperature.to_bits().to_le_bytes());
    hasher.update((req.max_output as u64).to_le_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportMode {
    Live,
    Record,
    Replay,
    Mock,
}

impl fmt::Display for TransportMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TransportMode::Live => "live",
            TransportMode::Record => "record",
            TransportMode::Replay => "replay",
            TransportMode::Mock => "mock",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for TransportMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(TransportMode::Live),
            "record" => Ok(TransportMode::Record),
            "replay" => Ok(TransportMode::Replay),
            "mock" => Ok(TransportMode::Mock),
            other => Err(format!(
                "unknown transport mode {other:?} (expected live, record, replay, or mock)"
            )),
        }
    }
}

/// What `record` mode wraps. Wrapping the mock transport lets replay
/// fixtures be produced without network access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordSource {
    Live,
    Mock,
}

/// Three-level judge verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    /// 2 fully correct, 1 partially correct, 0 incorrect.
    pub score: u8,
    pub rationale: String,
}

struct InFlightLimiter {
    max: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InFlightLimiter {
    fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> LimiterGuard<'_> {
        let mut active = self.active.lock().unwrap();
        while *active >= self.max {
            active = self.freed.wait(active).unwrap();
        }
        *active += 1;
        LimiterGuard { limiter: self }
    }
}

struct LimiterGuard<'a> {
    limiter: &'a InFlightLimiter,
}

impl Drop for LimiterGuard<'_> {
    fn drop(&mut self) {
        let mut active = self.limiter.active.lock().unwrap();
        *active -= 1;
        self.limiter.freed.notify_one();
    }
}

/// Model access handle shared by every module that talks to the model.
pub struct Gateway {
    mode: TransportMode,
    record_source: RecordSource,
    cache: Option<ResponseCache>,
    mock: MockTransport,
    prompts: PromptSet,
    model_name: String,
    max_output: u32,
    limiter: InFlightLimiter,
    max_retries: u32,
    calls: AtomicU64,
}

impl Gateway {
    /// Gateway in mock mode with the builtin deterministic rules.
    pub fn mock() -> Self {
        Self::with_mode(TransportMode::Mock, None)
    }

    /// Gateway in replay mode over `cache_dir`. Never performs network
    /// activity; unseen requests are [`GatewayError::ReplayMiss`].
    pub fn replay(cache_dir: &Path) -> Self {
        Self::with_mode(TransportMode::Replay, Some(cache_dir.to_path_buf()))
    }

    /// Gateway that records responses from `source` into `cache_dir`.
    pub fn record(cache_dir: &Path, source: RecordSource) -> Self {
        let mut gw = Self::with_mode(TransportMode::Record, Some(cache_dir.to_path_buf()));
        gw.record_source = source;
        gw
    }

    /// Gateway in live mode. Endpoint and credential are read from the
    /// documented environment variables at call time.
    pub fn live() -> Self {
        Self::with_mode(TransportMode::Live, None)
    }

    pub fn with_mode(mode: TransportMode, cache_dir: Option<PathBuf>) -> Self {
        Self {
            mode,
            record_source: RecordSource::Live,
            cache: cache_dir.map(ResponseCache::new),
            mock: MockTransport::new(),
            prompts: PromptSet::builtin(),
            model_name: DEFAULT_MODEL.to_string(),
            max_output: DEFAULT_MAX_OUTPUT,
            limiter: InFlightLimiter::new(4),
            max_retries: 3,
            calls: AtomicU64::new(0),
        }
    }

    pub fn with_prompts(mut self, prompts: PromptSet) -> Self {
        self.prompts = prompts;
        self
    }

    pub fn with_model_name(mut self, name: &str) -> Self {
        self.model_name = name.to_string();
        self
    }

    pub fn with_max_in_flight(mut self, max: usize) -> Self {
        self.limiter = InFlightLimiter::new(max);
        self
    }

    pub fn with_mock_rules(mut self, rules: Vec<MockRule>) -> Self {
        for rule in rules {
            self.mock.push_rule(rule);
        }
        self
    }

    /// Register a custom mock handler, tried before the builtin rules.
    pub fn register_mock<F>(&mut self, handler: F)
    where
        F: Fn(&ModelRequest) -> Option<String> + Send + Sync + 'static,
    {
        self.mock.register(handler);
    }

    pub fn mode(&self) -> TransportMode {
        self.mode
    }

    pub fn prompts(&self) -> &PromptSet {
        &self.prompts
    }

    pub fn model_name(&self) -> &str {
        &self.model_name
    }

    pub fn max_output(&self) -> u32 {
        self.max_output
    }

    /// Number of completions issued through this handle.
    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Build a request against the configured model at temperature 0.
    pub fn request(&self, system_prompt: &str, user_prompt: &str) -> ModelRequest {
        ModelRequest::new(
            &self.model_name,
            system_prompt,
            user_prompt,
            self.max_output,
        )
    }

    /// Execute one completion under the gateway's transport mode.
    pub fn complete(&self, req: &ModelRequest) -> Result<String, GatewayError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        match self.mode {
            TransportMode::Mock => Ok(self.mock.respond(req)),
            TransportMode::Replay => {
                let cache = self
                    .cache
                    .as_ref()
                    .ok_or(GatewayError::MissingCacheDir(TransportMode::Replay))?;
                let hash = request_hash(req);
                match cache.get(&hash)? {
                    Some(entry) => Ok(entry.response),
                    None => Err(GatewayError::ReplayMiss(hash)),
                }
            }
            TransportMode::Record => {
                let cache = self
                    .cache
                    .as_ref()
                    .ok_or(GatewayError::MissingCacheDir(TransportMode::Record))?;
                let hash = request_hash(req);
                if let Some(entry) = cache.get(&hash)? {
                    return Ok(entry.response);
                }
                let response = match self.record_source {
                    RecordSource::Live => self.call_live(req)?,
                    RecordSource::Mock => self.mock.respond(req),
                };
                cache.put(&hash, req, &response)?;
                Ok(response)
            }
            TransportMode::Live => self.call_live(req),
        }
    }

    fn call_live(&self, req: &ModelRequest) -> Result<String, GatewayError> {
        let _slot = self.limiter.acquire();
        live::call_with_retries(req, self.max_retries)
    }
}
