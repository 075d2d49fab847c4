use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};

/// Text completion backend for page generation and repair.
pub trait LlmClient: Send + Sync {
    fn model_id(&self) -> &str;

    /// Completion for `prompt`. `sample` distinguishes repeated draws for the
    /// same prompt; deterministic clients must depend only on (prompt, sample,
    /// their own seed).
    fn complete(&self, prompt: &str, sample: u64) -> Result<String>;
}

/// Removes one pair of outer code fences, if present.
pub fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let Some(body_start) = rest.find('\n') else {
        return t;
    };
    let body = &rest[body_start + 1..];
    match body.trim_end().strip_suffix("```") {
        Some(inner) => inner,
        None => body,
    }
}

/// Strips trailing whitespace from every line and ends the text with
/// exactly one newline (empty text stays empty).
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = text
        .lines()
        .map(str::trim_end)
        .collect::<Vec<_>>()
        .join("\n")
        .trim_end()
        .to_string();
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

/// Fence stripping plus whitespace normalization.
pub fn clean_completion(text: &str) -> String {
    normalize_whitespace(strip_fences(text))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
    /// Wall-clock budget for all attempts together.
    pub total_timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_secs(1),
            total_timeout: Duration::from_secs(120),
        }
    }
}

impl RetryPolicy {
    /// Runs `op` until it succeeds, fails with a non-retryable error, the
    /// attempts run out, or the budget is spent. `op` receives the time left.
    /// Backoff doubles after each failure.
    pub fn run<T>(&self, mut op: impl FnMut(Duration) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let mut backoff = self.initial_backoff;
        let mut last = None;
        for attempt in 1..=self.attempts.max(1) {
            let left = self.total_timeout.saturating_sub(start.elapsed());
            if left.is_zero() {
                break;
            }
            match op(left) {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() => {
                    log::warn!("attempt {attempt} failed: {e}");
                    last = Some(e);
                    if attempt < self.attempts {
                        let left = self.total_timeout.saturating_sub(start.elapsed());
                        std::thread::sleep(backoff.min(left));
                        backoff *= 2;
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Err(last.unwrap_or_else(|| Error::Provider {
            message: "retry budget exhausted".into(),
            retryable: true,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    /// Chat-completions URL.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Environment variable holding the bearer token.
    pub token_env: String,
    pub attempts: u32,
    pub initial_backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "local-model".into(),
            temperature: 0.2,
            max_tokens: 4096,
            token_env: "DASHGEN_LLM_TOKEN".into(),
            attempts: 3,
            initial_backoff_ms: 1000,
            timeout_secs: 120,
        }
    }
}

/// Chat-completion client over HTTP(S).
pub struct HttpLlmClient {
    config: LlmConfig,
    token: Option<String>,
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
}

impl HttpLlmClient {
    pub fn new(config: LlmConfig) -> Result<Self> {
        let token = std::env::var(&config.token_env).ok().filter(|t| !t.is_empty());
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        let retry = RetryPolicy {
            attempts: config.attempts,
            initial_backoff: Duration::from_millis(config.initial_backoff_ms),
            total_timeout: Duration::from_secs(config.timeout_secs),
        };
        Ok(HttpLlmClient {
            config,
            token,
            client,
            retry,
        })
    }

    fn once(&self, prompt: &str, sample: u64, timeout: Duration) -> Result<String> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
            "seed": sample,
        });
        let mut req = self.client.post(&self.config.endpoint).timeout(timeout).json(&body);
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().map_err(|e| Error::Provider {
            message: format!("LLM request failed: {e}"),
            retryable: true,
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Error::Provider {
                message: format!("LLM endpoint returned {status}"),
                retryable: status.is_server_error() || status.as_u16() == 429,
            });
        }
        let v: serde_json::Value = resp.json().map_err(|e| Error::Provider {
            message: format!("LLM response is not JSON: {e}"),
            retryable: false,
        })?;
        v.pointer("/choices/0/message/content")
            .or_else(|| v.pointer("/choices/0/text"))
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| Error::Provider {
                message: "LLM response has no completion text".into(),
                retryable: false,
            })
    }
}

impl LlmClient for HttpLlmClient {
    fn model_id(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, prompt: &str, sample: u64) -> Result<String> {
        self.retry.run(|left| self.once(prompt, sample, left))
    }
}

/// Always returns the same text.
#[derive(Debug, Clone)]
pub struct CannedClient {
    pub body: String,
}

impl LlmClient for CannedClient {
    fn model_id(&self) -> &str {
        "mock-canned"
    }

    fn complete(&self, _prompt: &str, _sample: u64) -> Result<String> {
        Ok(self.body.clone())
    }
}

/// Always fails with a retryable transport error.
#[derive(Debug, Clone, Default)]
pub struct FailingClient;

impl LlmClient for FailingClient {
    fn model_id(&self) -> &str {
        "mock-failing"
    }

    fn complete(&self, _prompt: &str, _sample: u64) -> Result<String> {
        Err(Error::Provider {
            message: "simulated timeout".into(),
            retryable: true,
        })
    }
}
