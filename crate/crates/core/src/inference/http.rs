use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use super::{Backend, BackendError, FinishReason, GenerationRequest, GenerationResult, Usage};

/// Statuses treated as transient and therefore retried.
const TRANSIENT_STATUSES: [u16; 5] = [408, 429, 502, 503, 504];

/// Chat-completion client: `POST {base}/chat/completions` with a single user
/// message carrying the prompt.
pub struct HttpBackend {
    agent: ureq::Agent,
    base_url: String,
    api_key: Option<String>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct ChatUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl HttpBackend {
    pub fn new(base_url: &str, api_key: Option<String>) -> Self {
        Self::with_timeout(base_url, api_key, Duration::from_secs(300))
    }

    pub fn with_timeout(base_url: &str, api_key: Option<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            agent,
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// Polls `GET {base}/models` until it answers 2xx or `timeout` elapses.
    pub fn wait_until_ready(&self, timeout: Duration, poll: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        loop {
            let ok = self
                .agent
                .get(&format!("{}/models", self.base_url))
                .call()
                .map(|r| r.status().is_success())
                .unwrap_or(false);
            if ok {
                return true;
            }
            if Instant::now() >= deadline {
                return false;
            }
            std::thread::sleep(poll);
        }
    }
}

fn error_message(body: &str) -> String {
    serde_json::from_str::<serde_json::Value>(body)
        .ok()
        .and_then(|v| v.pointer("/error/message").and_then(|m| m.as_str()).map(str::to_string))
        .unwrap_or_else(|| body.chars().take(500).collect())
}

impl Backend for HttpBackend {
    fn call(&self, request: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        let started = Instant::now();
        let body = json!({
            "model": request.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        let mut req = self
            .agent
            .post(&format!("{}/chat/completions", self.base_url))
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transport(e.to_string()))?;

        if !(200..300).contains(&status) {
            if TRANSIENT_STATUSES.contains(&status) {
                return Err(BackendError::Transient { status, body: text });
            }
            return Err(BackendError::Rejected {
                status,
                message: error_message(&text),
            });
        }

        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| BackendError::InvalidResponse(e.to_string()))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| BackendError::InvalidResponse("no choices".into()))?;
        let finish_reason = match choice.finish_reason.as_deref() {
            None | Some("stop") | Some("eos") | Some("end_turn") => FinishReason::Stop,
            Some("length") | Some("max_tokens") => FinishReason::Length,
            Some(_) => FinishReason::Error,
        };
        let usage = parsed
            .usage
            .map(|u| Usage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            })
            .unwrap_or_default();
        Ok(GenerationResult {
            text: choice.message.content.unwrap_or_default(),
            finish_reason,
            usage,
            latency: started.elapsed(),
        })
    }

    fn describe(&self) -> String {
        format!("chat-completion endpoint {}", self.base_url)
    }
}
