//! Chat-completion gateway with retries, an on-disk response cache and
//! bounded concurrency.

mod cache;
mod http;
mod mock;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{cache_key, CachedReply, ResponseCache};
pub use http::HttpBackend;
pub use mock::{MockAdapter, MockRule};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("endpoint failed after {attempts} tries: {message}")]
    EndpointError { attempts: usize, message: String },
    #[error("credentials rejected: {0}")]
    AuthError(String),
    #[error("no mock rule matches the prompt")]
    UnmatchedPrompt,
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("cache: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub endpoint_url: String,
    pub model_name: String,
    /// Completions requested per prompt.
    pub k: usize,
    pub temperature: f64,
    pub top_k: Option<u32>,
    pub top_p: Option<f64>,
    pub max_retries: usize,
    pub timeout_secs: u64,
    /// First retry delay; doubled on each further retry.
    pub backoff_ms: u64,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            endpoint_url: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model_name: "mock".into(),
            k: 3,
            temperature: 0.5,
            top_k: Some(50),
            top_p: Some(0.95),
            max_retries: 3,
            timeout_secs: 120,
            backoff_ms: 500,
            api_key_env: "SPVR_API_KEY".into(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.k == 0 {
            return Err(LlmError::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(LlmError::InvalidConfig("temperature must be non-negative".into()));
        }
        if let Some(p) = self.top_p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(LlmError::InvalidConfig("top_p must be in (0, 1]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub sample_id: String,
    pub ordinal: usize,
    /// 1-based.
    pub attempt: usize,
    pub raw_text: String,
    pub latency_ms: u64,
    pub cached: bool,
}

/// Something that answers a single-message chat.
pub trait ChatBackend: Send + Sync {
    /// `attempt` is 1-based; deterministic backends may use it to vary replies.
    fn chat(&self, prompt: &str, attempt: usize, cfg: &ModelConfig) -> Result<String, LlmError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for Box<T> {
    fn chat(&self, prompt: &str, attempt: usize, cfg: &ModelConfig) -> Result<String, LlmError> {
        (**self).chat(prompt, attempt, cfg)
    }
}

/// One prompt to complete `k` times.
#[derive(Debug, Clone)]
pub struct PromptRequest {
    pub sample_id: String,
    pub ordinal: usize,
    pub text: String,
}

pub struct Gateway<B> {
    backend: B,
    cfg: ModelConfig,
    cache: Option<ResponseCache>,
    calls: AtomicUsize,
}

impl<B: ChatBackend> Gateway<B> {
    pub fn new(backend: B, cfg: ModelConfig, cache: Option<ResponseCache>) -> Result<Self, LlmError> {
        cfg.validate()?;
        Ok(Gateway { backend, cfg, cache, calls: AtomicUsize::new(0) })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    /// Requests sent to the backend so far, cache hits excluded.
    pub fn backend_calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn call_with_retries(&self, prompt: &str, attempt: usize) -> Result<String, LlmError> {
        let mut delay = Duration::from_millis(self.cfg.backoff_ms);
        let mut tries = 0;
        loop {
            tries += 1;
            self.calls.fetch_add(1, Ordering::SeqCst);
            match self.backend.chat(prompt, attempt, &self.cfg) {
                Err(LlmError::Transient(message)) => {
                    if tries > self.cfg.max_retries {
                        return Err(LlmError::EndpointError { attempts: tries, message });
                    }
                    std::thread::sleep(delay);
                    delay *= 2;
                }
                other => return other,
            }
        }
    }

    /// `k` completions of one prompt.
    pub fn complete(&self, sample_id: &str, ordinal: usize, prompt: &str) -> Result<Vec<CompletionRecord>, LlmError> {
        (1..=self.cfg.k)
            .map(|attempt| {
                let key = cache_key(&self.cfg.model_name, prompt, attempt);
                if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
                    return Ok(CompletionRecord {
                        sample_id: sample_id.to_string(),
                        ordinal,
                        attempt,
                        raw_text: hit.raw_text,
                        latency_ms: hit.latency_ms,
                        cached: true,
                    });
                }
                let started = Instant::now();
                let raw_text = self.call_with_retries(prompt, attempt)?;
                let latency_ms = started.elapsed().as_millis() as u64;
                if let Some(cache) = &self.cache {
                    cache.put(&key, &CachedReply { model_name: self.cfg.model_name.clone(), attempt, raw_text: raw_text.clone(), latency_ms })?;
                }
                Ok(CompletionRecord { sample_id: sample_id.to_string(), ordinal, attempt, raw_text, latency_ms, cached: false })
            })
            .collect()
    }

    /// Completes every request with at most `jobs` in flight. Results keep the
    /// order of `requests`.
    pub fn complete_all(&self, requests: &[PromptRequest], jobs: usize) -> Vec<Result<Vec<CompletionRecord>, LlmError>> {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Result<Vec<CompletionRecord>, LlmError>>>> =
            requests.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..jobs.max(1).min(requests.len().max(1)) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(req) = requests.get(i) else { break };
                    let result = self.complete(&req.sample_id, req.ordinal, &req.text);
                    *slots[i].lock().expect("result slot") = Some(result);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().expect("result slot").expect("every request is processed"))
            .collect()
    }
}
