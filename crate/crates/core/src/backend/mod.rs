//! Uniform access to chat-completion backends.
//!
//! Every backend implements [`Backend`]: a remote HTTP endpoint with retries
//! and rate limiting, a deterministic simulated judge for offline runs, and
//! a recorded-fixture backend for replay. [`cached_complete`] layers a
//! content-addressed response cache over any of them.

mod cache;
mod fixture;
mod http;
mod sim;
mod throttle;

pub use cache::ResponseCache;
pub use fixture::FixtureBackend;
pub use http::{HttpBackend, HttpBackendConfig, RetryConfig};
pub use sim::{simulate_judgment, SimPolicy, SimulatedBackend, SimulatedJudgeConfig};

use crate::chat::{ChatRequest, ChatResponse};
use crate::protocol::Position;

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited after {attempts} attempt(s): {trace}")]
    RateLimited { attempts: u32, trace: String },
    #[error("transient failures exhausted after {attempts} attempt(s): {trace}")]
    TransientExhausted { attempts: u32, trace: String },
    #[error("backend returned an empty response body")]
    EmptyResponse,
    #[error("http error: {0}")]
    Http(String),
    #[error("no recorded fixture for key {key}")]
    FixtureMissing { key: String },
    #[error("cache io error: {0}")]
    CacheIo(String),
    #[error("simulated backend requires a call context")]
    MissingCallContext,
    #[error("simulated policy `{policy}` needs ground truth it was not given for example `{example_id}`")]
    MissingGroundTruth { policy: String, example_id: String },
    #[error(transparent)]
    Request(#[from] crate::chat::RequestError),
}

/// What a pipeline is asking a backend for. Real backends ignore this; the
/// simulated backend uses it as the ground-truth side channel that lets it
/// answer deterministically.
#[derive(Debug, Clone, PartialEq)]
pub enum CallTask {
    /// A pairwise judgment; positions say where the human-preferred and the
    /// more-informative answers sit.
    Judge {
        chosen_position: Position,
        informative_position: Option<Position>,
    },
    /// An informativeness comparison (no image).
    Informativeness { informative_position: Option<Position> },
    Anchor,
    Caption,
    DirectAnswer,
    Lengthen { target_words: usize },
    Score { label: String },
}

/// Per-call metadata injected by the pipeline layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CallContext {
    pub example_id: String,
    pub task: CallTask,
}

impl CallContext {
    pub fn new(example_id: impl Into<String>, task: CallTask) -> Self {
        Self {
            example_id: example_id.into(),
            task,
        }
    }
}

/// A chat-completion backend. Implementations must be safe for concurrent
/// invocation.
pub trait Backend: Send + Sync {
    fn complete(
        &self,
        request: &ChatRequest,
        ctx: Option<&CallContext>,
    ) -> Result<ChatResponse, BackendError>;

    /// Short description recorded in run manifests.
    fn name(&self) -> String;
}

/// Complete `request` through `cache`: a hit returns the stored response with
/// `from_cache = true` and performs zero backend calls; a miss calls the
/// backend and persists the response atomically.
pub fn cached_complete(
    backend: &dyn Backend,
    request: &ChatRequest,
    ctx: Option<&CallContext>,
    cache: &ResponseCache,
) -> Result<ChatResponse, BackendError> {
    let key = request.cache_key();
    if let Some(mut hit) = cache.get(&key) {
        hit.from_cache = true;
        return Ok(hit);
    }
    let response = backend.complete(request, ctx)?;
    cache.put(&key, request, &response)?;
    Ok(response)
}
