//! Text-completion backends behind one trait: live HTTP, record/replay
//! fixtures and a deterministic mock.

mod live;
mod mock;
mod replay;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::prompt::{Hyperparams, Prompt, TaskKind};

pub use live::{LiveConfig, LiveProvider, API_KEY_ENV};
pub use mock::MockProvider;
pub use replay::{FixtureRecord, FixtureStore, RecordingProvider, ReplayProvider};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt_text: String,
    pub hyperparams: Hyperparams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_sequences: Option<Vec<String>>,
    /// Which prompt family produced the text; decides the fixture file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskKind>,
}

impl GenerationRequest {
    pub fn new(prompt_text: impl Into<String>, hyperparams: Hyperparams) -> Self {
        Self {
            prompt_text: prompt_text.into(),
            hyperparams,
            stop_sequences: None,
            task: None,
        }
    }

    pub fn from_prompt(prompt: &Prompt) -> Self {
        Self {
            prompt_text: prompt.render(),
            hyperparams: prompt.hyperparams.clone(),
            stop_sequences: None,
            task: Some(prompt.task),
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.prompt_text.is_empty() {
            return Err(ProviderError::InvalidRequest("empty prompt".into()));
        }
        self.hyperparams
            .validate()
            .map_err(|e| ProviderError::InvalidRequest(e.to_string()))
    }

    /// The request's task, falling back to the prompt's instruction line.
    pub fn task_kind(&self) -> Option<TaskKind> {
        self.task.or_else(|| {
            self.prompt_text
                .lines()
                .next()
                .and_then(TaskKind::from_instruction)
        })
    }

    /// Stable hex digest of (prompt, temperature to 4 places, max_tokens).
    pub fn fixture_key(&self) -> String {
        let canonical = serde_json::json!({
            "max_tokens": self.hyperparams.max_tokens,
            "prompt": self.prompt_text,
            "temperature": format!("{:.4}", self.hyperparams.temperature),
        });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinishReason {
    Length,
    Stop,
    Other,
}

impl FinishReason {
    fn from_api(s: Option<&str>) -> Self {
        match s {
            Some("length") => FinishReason::Length,
            Some("stop") => FinishReason::Stop,
            _ => FinishReason::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub text: String,
    pub finish_reason: FinishReason,
    pub provider: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("network error after {attempts} attempt(s): {message}")]
    Network { message: String, attempts: u32 },
    #[error("rate limited (retry after {retry_after_secs:?} s)")]
    RateLimited { retry_after_secs: Option<u64> },
    #[error("no fixture for request key {key}")]
    FixtureMiss { key: String },
    #[error("fixture {key} already recorded with different text")]
    FixtureConflict { key: String },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("fixture store: {0}")]
    Io(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            ProviderError::Network { .. } | ProviderError::RateLimited { .. }
        )
    }
}

pub trait CompletionProvider: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResult, ProviderError>;
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for Arc<P> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResult, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: CompletionProvider + ?Sized> CompletionProvider for Box<P> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResult, ProviderError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Live,
    Replay,
    Mock,
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProviderKind::Live => "live",
            ProviderKind::Replay => "replay",
            ProviderKind::Mock => "mock",
        })
    }
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(ProviderKind::Live),
            "replay" => Ok(ProviderKind::Replay),
            "mock" => Ok(ProviderKind::Mock),
            other => Err(format!("unknown provider `{other}`; expected live, replay or mock")),
        }
    }
}
