//! Text generation against a chat-completion endpoint or a scripted stand-in.

mod http;
mod scripted;

pub use http::HttpBackend;
pub use scripted::{Fallback, ScriptedBackend};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const ENV_ENDPOINT: &str = "VERISTRUCT_ENDPOINT";
pub const ENV_API_KEY: &str = "VERISTRUCT_API_KEY";
pub const ENV_MODEL: &str = "VERISTRUCT_MODEL";

pub const DEFAULT_TEMPERATURE: f64 = 0.01;
pub const DEFAULT_MAX_TOKENS: u32 = 1024;

/// Hex SHA-256 of the prompt text; the key used by scripted fixtures and
/// checkpoints.
pub fn fingerprint(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_name: String,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            model_name: model_name.into(),
        }
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(InferenceError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(InferenceError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub text: String,
    pub finish_reason: FinishReason,
    pub usage: Usage,
    #[serde(skip)]
    pub latency: Duration,
}

/// Failure of a single backend call, before retry handling.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("transient endpoint status {status}: {body}")]
    Transient { status: u16, body: String },
    #[error("endpoint rejected request with status {status}: {message}")]
    Rejected { status: u16, message: String },
    #[error("no scripted response for prompt {fingerprint}")]
    ScriptMiss { fingerprint: String },
    #[error("malformed endpoint response: {0}")]
    InvalidResponse(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Transport(_) | BackendError::Transient { .. })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InferenceError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint rejected request ({status}): {message}")]
    EndpointRejected { status: u16, message: String },
    #[error("generation truncated at the token limit")]
    Truncated { partial: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("endpoint configuration: {0}")]
    Config(String),
}

/// A generation backend. Implementations must be safe to call from several
/// threads at once.
pub trait Backend: Send + Sync {
    fn call(&self, request: &GenerationRequest) -> Result<GenerationResult, BackendError>;

    /// Short description for logs and run manifests.
    fn describe(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub multiplier: f64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            initial_backoff_ms: 500,
            multiplier: 2.0,
            max_backoff_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = self.multiplier.max(1.0).powi(retry.saturating_sub(1) as i32);
        let ms = (self.initial_backoff_ms as f64 * factor).min(self.max_backoff_ms as f64);
        Duration::from_millis(ms as u64)
    }
}

/// Retrying, concurrency-limited front end over a [`Backend`].
#[derive(Clone)]
pub struct Client {
    backend: Arc<dyn Backend>,
    retry: RetryPolicy,
    concurrency: usize,
}

impl Client {
    pub fn new(backend: Arc<dyn Backend>) -> Self {
        Self {
            backend,
            retry: RetryPolicy::default(),
            concurrency: 1,
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Maximum number of requests in flight in [`Client::generate_all`].
    pub fn with_concurrency(mut self, k: usize) -> Self {
        self.concurrency = k.max(1);
        self
    }

    pub fn describe(&self) -> String {
        self.backend.describe()
    }

    /// One generation. Transport failures and transient statuses are retried
    /// with exponential backoff; rejections are returned immediately. A
    /// length-truncated completion is surfaced as [`InferenceError::Truncated`].
    pub fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult, InferenceError> {
        request.validate()?;
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.backend.call(request) {
                Ok(result) if result.finish_reason == FinishReason::Length => {
                    return Err(InferenceError::Truncated { partial: result.text })
                }
                Ok(result) => return Ok(result),
                Err(e) if e.is_retryable() && attempt < max_attempts => {
                    log::warn!("attempt {attempt}/{max_attempts} failed: {e}; retrying");
                    std::thread::sleep(self.retry.backoff(attempt));
                }
                Err(BackendError::Rejected { status, message }) => {
                    return Err(InferenceError::EndpointRejected { status, message })
                }
                Err(e) => {
                    return Err(InferenceError::Transport {
                        attempts: attempt,
                        message: e.to_string(),
                    })
                }
            }
        }
    }

    /// Runs all requests with at most `concurrency` in flight. `on_result` is
    /// invoked on the calling thread, one result at a time, in completion
    /// order; the returned vector is in request order.
    pub fn generate_all<F>(
        &self,
        requests: &[GenerationRequest],
        mut on_result: F,
    ) -> Vec<Result<GenerationResult, InferenceError>>
    where
        F: FnMut(usize, &Result<GenerationResult, InferenceError>),
    {
        let n = requests.len();
        let mut results: Vec<Option<Result<GenerationResult, InferenceError>>> = vec![None; n];
        if n == 0 {
            return Vec::new();
        }
        let next = AtomicUsize::new(0);
        let workers = self.concurrency.min(n);
        let (tx, rx) = mpsc::channel();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                let tx = tx.clone();
                let next = &next;
                scope.spawn(move || loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= n {
                        break;
                    }
                    let r = self.generate(&requests[i]);
                    if tx.send((i, r)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            for (i, r) in rx {
                on_result(i, &r);
                results[i] = Some(r);
            }
        });
        results
            .into_iter()
            .map(|r| r.expect("every request produces a result"))
            .collect()
    }
}

/// Builds a backend from an endpoint spec: `scripted:<fixture.json>` or an
/// `http(s)://` base URL. The API key is read from `VERISTRUCT_API_KEY`.
pub fn backend_from_spec(spec: &str) -> Result<Arc<dyn Backend>, InferenceError> {
    if let Some(path) = spec.strip_prefix("scripted:") {
        let backend = ScriptedBackend::from_file(std::path::Path::new(path))
            .map_err(|e| InferenceError::Config(format!("{path}: {e}")))?;
        return Ok(Arc::new(backend));
    }
    if spec.starts_with("http://") || spec.starts_with("https://") {
        let key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        return Ok(Arc::new(HttpBackend::new(spec, key)));
    }
    Err(InferenceError::Config(format!(
        "unrecognized endpoint {spec:?} (expected http(s):// URL or scripted:<file>)"
    )))
}
