//! Chat-completion client: an HTTP backend speaking the OpenAI-style wire
//! format and a replay backend that serves canned replies keyed by request
//! digest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const API_KEY_ENV: &str = "LEADER_API_KEY";
pub const DEFAULT_TEMPERATURE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, messages: Vec<ChatMessage>) -> Self {
        ChatRequest {
            model: model.into(),
            messages,
            temperature: DEFAULT_TEMPERATURE,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.messages.is_empty() {
            return Err(LlmError::InvalidRequest("no messages".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        Ok(())
    }

    /// Hex SHA-256 of the request's JSON form; the replay lookup key.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("request serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("network error: {0}")]
    Network(String),
    #[error("authentication failed (status {0})")]
    Auth(u16),
    #[error("rate limited")]
    RateLimited,
    #[error("server error (status {0})")]
    Server(u16),
    #[error("malformed response: {0}")]
    BadResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no API key in ${API_KEY_ENV}")]
    MissingKey,
    #[error("no replay fixture for digest {0}")]
    UnknownFixture(String),
    #[error("fixture file {0}: {1}")]
    Fixture(String, String),
}

impl LlmError {
    fn is_transient(&self) -> bool {
        matches!(self, LlmError::Network(_) | LlmError::RateLimited | LlmError::Server(_))
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub max_concurrency: usize,
    pub timeout_secs: u64,
    /// First retry delay; doubles on each further attempt.
    pub backoff_ms: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint_url: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "default".into(),
            temperature: DEFAULT_TEMPERATURE,
            max_retries: 3,
            max_concurrency: 4,
            timeout_secs: 120,
            backoff_ms: 500,
        }
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn acquire(&self) -> SemGuard<'_> {
        let mut n = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.cv.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        SemGuard(self)
    }
}

struct SemGuard<'a>(&'a Semaphore);

impl Drop for SemGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct HttpBackend {
    config: LlmConfig,
    api_key: String,
    agent: ureq::Agent,
    slots: Semaphore,
}

impl fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpBackend")
            .field("config", &self.config)
            .field("api_key", &"<redacted>")
            .finish()
    }
}

#[derive(Deserialize)]
struct WireReply {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<serde_json::Value>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: String,
}

impl HttpBackend {
    /// Backend using the key from `$LEADER_API_KEY`.
    pub fn from_env(config: LlmConfig) -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| LlmError::MissingKey)?;
        Ok(Self::new(config, key))
    }

    pub fn new(config: LlmConfig, api_key: String) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        let slots = Semaphore {
            free: Mutex::new(config.max_concurrency.max(1)),
            cv: Condvar::new(),
        };
        HttpBackend {
            config,
            api_key,
            agent,
            slots,
        }
    }

    fn attempt(&self, body: &str) -> Result<String, LlmError> {
        let mut resp = self
            .agent
            .post(&self.config.endpoint_url)
            .header("Content-Type", "application/json")
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send(body)
            .map_err(|e| LlmError::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(LlmError::Auth(status)),
            429 => return Err(LlmError::RateLimited),
            500..=599 => return Err(LlmError::Server(status)),
            _ => return Err(LlmError::BadResponse(format!("status {status}"))),
        }
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| LlmError::Network(e.to_string()))?;
        let reply: WireReply =
            serde_json::from_str(&text).map_err(|e| LlmError::BadResponse(e.to_string()))?;
        if let Some(u) = &reply.usage {
            log::info!("llm usage: {u}");
        }
        reply
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| LlmError::BadResponse("no choices".into()))
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        request.validate()?;
        let body = serde_json::to_string(request).expect("request serializes");
        let _slot = self.slots.acquire();
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Err(e) if e.is_transient() && attempt < self.config.max_retries => {
                    let delay = self.config.backoff_ms.saturating_mul(1 << attempt.min(16));
                    log::warn!("llm request failed ({e}); retrying in {delay} ms");
                    std::thread::sleep(Duration::from_millis(delay));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// Serves replies from a digest-to-text map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayBackend {
    fixtures: BTreeMap<String, String>,
}

impl ReplayBackend {
    pub fn new(fixtures: BTreeMap<String, String>) -> Self {
        ReplayBackend { fixtures }
    }

    /// Load one JSON object file, or every `*.json` file of a directory.
    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let mut files = Vec::new();
        if path.is_dir() {
            let rd = std::fs::read_dir(path)
                .map_err(|e| LlmError::Fixture(path.display().to_string(), e.to_string()))?;
            for entry in rd.flatten() {
                let p = entry.path();
                if p.extension().is_some_and(|x| x == "json") {
                    files.push(p);
                }
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }
        let mut fixtures = BTreeMap::new();
        for f in files {
            let err = |e: String| LlmError::Fixture(f.display().to_string(), e);
            let text = std::fs::read_to_string(&f).map_err(|e| err(e.to_string()))?;
            let map: BTreeMap<String, String> =
                serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
            fixtures.extend(map);
        }
        Ok(ReplayBackend { fixtures })
    }

    pub fn insert(&mut self, request: &ChatRequest, reply: impl Into<String>) {
        self.fixtures.insert(request.digest(), reply.into());
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.fixtures).expect("map serializes") + "\n"
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        request.validate()?;
        let d = request.digest();
        self.fixtures
            .get(&d)
            .cloned()
            .ok_or(LlmError::UnknownFixture(d))
    }
}

/// Forwards to another backend and remembers every reply, so a live
/// session can be saved as replay fixtures.
pub struct RecordingBackend<B> {
    inner: B,
    log: Mutex<BTreeMap<String, String>>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        RecordingBackend {
            inner,
            log: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn recorded(&self) -> ReplayBackend {
        ReplayBackend::new(self.log.lock().unwrap_or_else(|e| e.into_inner()).clone())
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let reply = self.inner.complete(request)?;
        self.log
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(request.digest(), reply.clone());
        Ok(reply)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        (**self).complete(request)
    }
}
