use std::time::Duration;

use log::{debug, warn};
use reqwest::blocking::Client;
use reqwest::header::RETRY_AFTER;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{CompletionProvider, FinishReason, GenerationRequest, GenerationResult, ProviderError};

/// Environment variable holding the API key. Keys are never read from flags
/// or config files.
pub const API_KEY_ENV: &str = "MODELCOMP_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    pub base_url: String,
    pub path: String,
    pub auth_header: String,
    /// Prefix placed before the key in the auth header, e.g. `Bearer `.
    pub auth_scheme: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    /// Upper bound on a server-requested `Retry-After` wait.
    pub max_retry_after_secs: u64,
    pub top_p: f64,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com".into(),
            path: "/v1/completions".into(),
            auth_header: "Authorization".into(),
            auth_scheme: "Bearer ".into(),
            timeout_secs: 30,
            max_retries: 3,
            initial_backoff_ms: 500,
            max_backoff_ms: 8_000,
            max_retry_after_secs: 60,
            top_p: 1.0,
            api_key: None,
        }
    }
}

impl LiveConfig {
    pub fn with_env_key(mut self) -> Self {
        self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        self
    }

    fn endpoint(&self) -> String {
        format!(
            "{}/{}",
            self.base_url.trim_end_matches('/'),
            self.path.trim_start_matches('/')
        )
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self
            .initial_backoff_ms
            .saturating_mul(1u64 << attempt.min(20))
            .min(self.max_backoff_ms);
        Duration::from_millis(ms)
    }
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    #[serde(default)]
    text: String,
    finish_reason: Option<String>,
}

enum Attempt {
    Done(GenerationResult),
    Retry(ProviderError, Option<Duration>),
    Fail(ProviderError),
}

pub struct LiveProvider {
    config: LiveConfig,
    client: Client,
}

impl LiveProvider {
    pub fn new(config: LiveConfig) -> Result<Self, ProviderError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| ProviderError::Network {
                message: e.to_string(),
                attempts: 0,
            })?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &LiveConfig {
        &self.config
    }

    fn body(&self, request: &GenerationRequest) -> serde_json::Value {
        let mut body = json!({
            "model": request.hyperparams.model_name,
            "prompt": request.prompt_text,
            "temperature": request.hyperparams.temperature,
            "max_tokens": request.hyperparams.max_tokens,
            "top_p": self.config.top_p,
            "n": 1,
        });
        if let Some(stop) = request.stop_sequences.as_ref().filter(|s| !s.is_empty()) {
            body["stop"] = json!(stop);
        }
        body
    }

    fn attempt(&self, request: &GenerationRequest, attempts: u32) -> Attempt {
        let mut http = self.client.post(self.config.endpoint()).json(&self.body(request));
        if let Some(key) = &self.config.api_key {
            http = http.header(
                self.config.auth_header.as_str(),
                format!("{}{key}", self.config.auth_scheme),
            );
        }
        let response = match http.send() {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Retry(
                    ProviderError::Network {
                        message: e.to_string(),
                        attempts,
                    },
                    None,
                )
            }
        };
        let status = response.status();
        match status {
            StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => {
                let detail = response.text().unwrap_or_default();
                Attempt::Fail(ProviderError::Auth(format!("{status}: {}", detail.trim())))
            }
            StatusCode::TOO_MANY_REQUESTS => {
                let retry_after = response
                    .headers()
                    .get(RETRY_AFTER)
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.trim().parse::<u64>().ok());
                let wait = retry_after
                    .map(|s| Duration::from_secs(s.min(self.config.max_retry_after_secs)));
                Attempt::Retry(ProviderError::RateLimited { retry_after_secs: retry_after }, wait)
            }
            s if s.is_server_error() => Attempt::Retry(
                ProviderError::Network {
                    message: format!("server returned {s}"),
                    attempts,
                },
                None,
            ),
            s if !s.is_success() => {
                let detail = response.text().unwrap_or_default();
                Attempt::Fail(ProviderError::InvalidRequest(format!("{s}: {}", detail.trim())))
            }
            _ => match response.json::<CompletionResponse>() {
                Ok(parsed) => match parsed.choices.into_iter().next() {
                    Some(choice) => Attempt::Done(GenerationResult {
                        text: choice.text,
                        finish_reason: FinishReason::from_api(choice.finish_reason.as_deref()),
                        provider: self.id().to_string(),
                    }),
                    None => Attempt::Fail(ProviderError::Protocol("response has no choices".into())),
                },
                Err(e) => Attempt::Fail(ProviderError::Protocol(e.to_string())),
            },
        }
    }
}

impl CompletionProvider for LiveProvider {
    fn id(&self) -> &str {
        "live"
    }

    fn complete(&self, request: &GenerationRequest) -> Result<GenerationResult, ProviderError> {
        request.validate()?;
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.attempt(request, attempt) {
                Attempt::Done(result) => return Ok(result),
                Attempt::Fail(err) => return Err(err),
                Attempt::Retry(err, wait) => {
                    if attempt > self.config.max_retries {
                        return Err(match err {
                            ProviderError::Network { message, .. } => ProviderError::Network {
                                message,
                                attempts: attempt,
                            },
                            other => other,
                        });
                    }
                    let wait = wait.unwrap_or_else(|| self.config.backoff(attempt - 1));
                    warn!("completion attempt {attempt} failed ({err}); retrying in {wait:?}");
                    std::thread::sleep(wait);
                }
            }
            debug!("retrying completion request");
        }
    }
}
