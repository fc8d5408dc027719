//! OpenAI-compatible chat-completion transport.

use std::time::Duration;

use serde::Serialize;

use super::{ChatRequest, LlmError, Message, Transport};

pub const ENV_BASE_URL: &str = "THROWGUARD_LLM_BASE_URL";
pub const ENV_API_KEY: &str = "THROWGUARD_LLM_API_KEY";
pub const ENV_MODEL: &str = "THROWGUARD_LLM_MODEL";

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            timeout: Duration::from_secs(120),
            max_retries: 3,
            base_delay: Duration::from_millis(500),
        }
    }

    /// Endpoint and credential from the environment; nothing else is consulted.
    pub fn from_env() -> Result<Self, LlmError> {
        let base = std::env::var(ENV_BASE_URL)
            .map_err(|_| LlmError::NotConfigured(format!("{ENV_BASE_URL} is not set")))?;
        let mut cfg = Self::new(base);
        cfg.api_key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        Ok(cfg)
    }
}

pub struct HttpTransport {
    config: HttpConfig,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct Body<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
    max_tokens: u32,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fail(LlmError),
}

impl HttpTransport {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, request: &ChatRequest) -> Attempt {
        let body = Body {
            model: &request.model,
            messages: &request.messages,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let mut call = self.agent.post(&self.url()).header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = match call.send_json(&body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if status == 429 || status >= 500 {
            return Attempt::Retry(format!("status {status}: {}", excerpt(&text)));
        }
        if !(200..300).contains(&status) {
            return Attempt::Fail(LlmError::EndpointError { status, body: excerpt(&text) });
        }
        let parsed: serde_json::Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(_) => return Attempt::Fail(LlmError::EndpointError { status, body: excerpt(&text) }),
        };
        match parsed.pointer("/choices/0/message/content").and_then(|c| c.as_str()) {
            Some(content) => Attempt::Done(content.to_string()),
            None => Attempt::Fail(LlmError::EndpointError { status, body: excerpt(&text) }),
        }
    }
}

fn excerpt(body: &str) -> String {
    const MAX: usize = 300;
    match body.char_indices().nth(MAX) {
        Some((at, _)) => format!("{}...", &body[..at]),
        None => body.to_string(),
    }
}

impl Transport for HttpTransport {
    /// Retries transport failures, 429 and 5xx with exponential backoff.
    fn send(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let mut retries = 0;
        loop {
            match self.attempt(request) {
                Attempt::Done(s) => return Ok(s),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(message) => {
                    if retries >= self.config.max_retries {
                        return Err(LlmError::TransportError { retries, message });
                    }
                    std::thread::sleep(self.config.base_delay * 2u32.pow(retries));
                    retries += 1;
                }
            }
        }
    }
}
