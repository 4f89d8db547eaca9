use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{ChatBackend, LlmError, ModelConfig};

/// JSON chat-completion endpoint (`messages` in, `choices[0].message.content` out).
#[derive(Debug, Clone)]
pub struct HttpBackend {
    client: Client,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(cfg: &ModelConfig) -> Result<Self, LlmError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| LlmError::InvalidConfig(e.to_string()))?;
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        Ok(HttpBackend { client, api_key })
    }
}

pub(crate) fn request_body(prompt: &str, cfg: &ModelConfig) -> Value {
    let mut body = json!({
        "model": cfg.model_name,
        "messages": [{ "role": "user", "content": prompt }],
        "temperature": cfg.temperature,
        "n": 1,
    });
    if let Some(p) = cfg.top_p {
        body["top_p"] = json!(p);
    }
    if let Some(k) = cfg.top_k {
        body["top_k"] = json!(k);
    }
    body
}

pub(crate) fn reply_text(body: &Value) -> Option<String> {
    body.pointer("/choices/0/message/content")?.as_str().map(str::to_string)
}

impl ChatBackend for HttpBackend {
    fn chat(&self, prompt: &str, _attempt: usize, cfg: &ModelConfig) -> Result<String, LlmError> {
        let mut req = self.client.post(&cfg.endpoint_url).json(&request_body(prompt, cfg));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| LlmError::Transient(e.to_string()))?;
        let status = resp.status();
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            return Err(LlmError::AuthError(status.to_string()));
        }
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Err(LlmError::Transient(status.to_string()));
        }
        if !status.is_success() {
            return Err(LlmError::EndpointError { attempts: 1, message: status.to_string() });
        }
        let body: Value = resp.json().map_err(|e| LlmError::Transient(e.to_string()))?;
        reply_text(&body).ok_or_else(|| LlmError::EndpointError { attempts: 1, message: "reply has no message content".into() })
    }
}
