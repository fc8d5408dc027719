//! Chat-completion client with record/replay cassettes.

mod cassette;
mod http;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cassette::{canonical_key, Cassette, CassetteEntry};
pub use http::{HttpConfig, HttpTransport, ENV_API_KEY, ENV_BASE_URL, ENV_MODEL};

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";
pub const DEFAULT_MAX_TOKENS: u32 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<Message>,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn new(messages: Vec<Message>) -> Self {
        Self {
            messages,
            model: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.messages.is_empty() {
            return Err(LlmError::InvalidRequest("request has no messages".into()));
        }
        if self
            .messages
            .windows(2)
            .any(|w| w[0].role == Role::Assistant && w[1].role == Role::Assistant)
        {
            return Err(LlmError::InvalidRequest("two consecutive assistant messages".into()));
        }
        if !self.temperature.is_finite() {
            return Err(LlmError::InvalidRequest("temperature must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("no cassette entry for request digest {digest}")]
    ReplayMiss { digest: String },
    #[error("transport failed after {retries} retries: {message}")]
    TransportError { retries: u32, message: String },
    #[error("endpoint returned status {status}: {body}")]
    EndpointError { status: u16, body: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("cassette error: {0}")]
    Cassette(String),
    #[error("client is not configured: {0}")]
    NotConfigured(String),
}

/// Anything that can answer a chat request.
pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;
}

/// The network side of a client. Implementations own their retry policy.
pub trait Transport: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<String, LlmError>;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn send(&self, request: &ChatRequest) -> Result<String, LlmError> {
        (**self).send(request)
    }
}

impl<T: ChatClient + ?Sized> ChatClient for Arc<T> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClientMode {
    Live,
    Record,
    Replay,
    ReplayStrict,
}

/// Dispatches requests to the cassette, the transport, or both, by mode.
pub struct LlmClient {
    mode: ClientMode,
    cassette: Option<Arc<Cassette>>,
    transport: Option<Arc<dyn Transport>>,
    fall_through: bool,
}

impl LlmClient {
    pub fn new(mode: ClientMode) -> Self {
        Self { mode, cassette: None, transport: None, fall_through: false }
    }

    pub fn with_cassette(mut self, cassette: Arc<Cassette>) -> Self {
        self.cassette = Some(cassette);
        self
    }

    pub fn with_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.transport = Some(transport);
        self
    }

    /// In `Replay` mode, send misses to the transport instead of failing.
    pub fn fall_through_on_miss(mut self, yes: bool) -> Self {
        self.fall_through = yes;
        self
    }

    pub fn mode(&self) -> ClientMode {
        self.mode
    }

    pub fn cassette(&self) -> Option<&Arc<Cassette>> {
        self.cassette.as_ref()
    }

    fn live(&self, request: &ChatRequest) -> Result<String, LlmError> {
        match &self.transport {
            Some(t) => t.send(request),
            None => Err(LlmError::NotConfigured("no transport for live requests".into())),
        }
    }

    fn tape(&self) -> Result<&Cassette, LlmError> {
        self.cassette
            .as_deref()
            .ok_or_else(|| LlmError::NotConfigured(format!("{:?} mode needs a cassette", self.mode)))
    }
}

impl ChatClient for LlmClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        request.validate()?;
        match self.mode {
            ClientMode::Live => self.live(request),
            ClientMode::Record => {
                let tape = self.tape()?;
                let response = self.live(request)?;
                tape.append(CassetteEntry::new(request.clone(), response.clone()))?;
                Ok(response)
            }
            ClientMode::Replay | ClientMode::ReplayStrict => {
                let tape = self.tape()?;
                let key = canonical_key(request);
                match tape.get(&key) {
                    Some(hit) => Ok(hit),
                    None if self.mode == ClientMode::Replay && self.fall_through => self.live(request),
                    None => Err(LlmError::ReplayMiss { digest: key }),
                }
            }
        }
    }
}

/// A transport that refuses every call; proves that replay never touches the network.
#[derive(Debug, Default, Clone, Copy)]
pub struct FailingTransport;

impl Transport for FailingTransport {
    fn send(&self, _request: &ChatRequest) -> Result<String, LlmError> {
        Err(LlmError::TransportError { retries: 0, message: "network access is disabled".into() })
    }
}

type Rule = Box<dyn Fn(&ChatRequest) -> Option<String> + Send + Sync>;

/// In-process transport answering from a list of rules; the first rule that
/// returns `Some` wins. Used for tests and for recording fixture cassettes.
#[derive(Default)]
pub struct ScriptedTransport {
    rules: Vec<Rule>,
    calls: std::sync::atomic::AtomicUsize,
}

impl ScriptedTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rule(mut self, f: impl Fn(&ChatRequest) -> Option<String> + Send + Sync + 'static) -> Self {
        self.rules.push(Box::new(f));
        self
    }

    /// Answers `response` when the last user message contains `needle`.
    pub fn when_last_contains(self, needle: &str, response: &str) -> Self {
        let needle = needle.to_string();
        let response = response.to_string();
        self.rule(move |req| {
            let last = req.messages.iter().rev().find(|m| m.role == Role::User)?;
            last.content.contains(&needle).then(|| response.clone())
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(std::sync::atomic::Ordering::SeqCst)
    }
}

impl Transport for ScriptedTransport {
    fn send(&self, request: &ChatRequest) -> Result<String, LlmError> {
        self.calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        self.rules
            .iter()
            .find_map(|r| r(request))
            .ok_or_else(|| LlmError::EndpointError { status: 404, body: "no scripted response".into() })
    }
}
