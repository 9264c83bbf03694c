use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{fingerprint, Backend, BackendError, FinishReason, GenerationRequest, GenerationResult, Usage};

/// What to do for a prompt with no scripted response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    #[default]
    Error,
    /// Return the prompt itself.
    Echo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum Scripted {
    Text(String),
    Detailed {
        text: String,
        #[serde(default = "stop")]
        finish_reason: FinishReason,
    },
}

fn stop() -> FinishReason {
    FinishReason::Stop
}

/// Deterministic prompt -> response table keyed by [`fingerprint`].
///
/// The fixture file is a JSON object mapping prompt SHA-256 (hex) to the
/// response text. A value may also be `{"text": ..., "finish_reason": "length"}`
/// to script a truncated completion.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    responses: HashMap<String, Scripted>,
    fallback: Fallback,
}

impl ScriptedBackend {
    pub fn new(fallback: Fallback) -> Self {
        Self {
            responses: HashMap::new(),
            fallback,
        }
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        let responses: HashMap<String, Scripted> = serde_json::from_str(json)?;
        Ok(Self {
            responses,
            fallback: Fallback::Error,
        })
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn with_fallback(mut self, fallback: Fallback) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn insert(&mut self, prompt: &str, response: impl Into<String>) {
        self.responses
            .insert(fingerprint(prompt), Scripted::Text(response.into()));
    }

    pub fn insert_truncated(&mut self, prompt: &str, partial: impl Into<String>) {
        self.responses.insert(
            fingerprint(prompt),
            Scripted::Detailed {
                text: partial.into(),
                finish_reason: FinishReason::Length,
            },
        );
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    /// Serializes the table in fixture-file form, keys sorted.
    pub fn to_json(&self) -> String {
        let sorted: std::collections::BTreeMap<_, _> = self.responses.iter().collect();
        serde_json::to_string_pretty(&sorted).expect("string map serializes")
    }
}

fn word_count(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

impl Backend for ScriptedBackend {
    fn call(&self, request: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        let key = fingerprint(&request.prompt);
        let (text, finish_reason) = match (self.responses.get(&key), self.fallback) {
            (Some(Scripted::Text(t)), _) => (t.clone(), FinishReason::Stop),
            (Some(Scripted::Detailed { text, finish_reason }), _) => (text.clone(), *finish_reason),
            (None, Fallback::Echo) => (request.prompt.clone(), FinishReason::Stop),
            (None, Fallback::Error) => return Err(BackendError::ScriptMiss { fingerprint: key }),
        };
        Ok(GenerationResult {
            usage: Usage {
                prompt_tokens: word_count(&request.prompt),
                completion_tokens: word_count(&text),
            },
            text,
            finish_reason,
            latency: Duration::ZERO,
        })
    }

    fn describe(&self) -> String {
        format!("scripted({} responses)", self.responses.len())
    }
}
