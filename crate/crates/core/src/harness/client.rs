//! Chat transports: live HTTP, replay file, and a cache wrapper.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    /// Greedy request: temperature is always 0.
    pub fn new(model: &str, messages: Vec<ChatMessage>) -> Self {
        Self {
            model: model.to_string(),
            messages,
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("retryable transport error: {0}")]
    Retryable(String),
    #[error("transport error: {0}")]
    Fatal(String),
}

pub trait ModelClient: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError>;
}

/// Hex SHA-256 of the JSON encoding of a message list.
pub fn messages_hash(messages: &[ChatMessage]) -> String {
    let text = serde_json::to_string(messages).expect("messages serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// One line of a replay or cache file. `error` scripts a transport
/// failure; several lines with one hash are served in order, the last
/// one repeating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default)]
    pub reply: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_tokens: Option<u64>,
}

impl ReplayEntry {
    pub fn reply(messages: &[ChatMessage], reply: impl Into<String>) -> Self {
        Self {
            hash: messages_hash(messages),
            model: None,
            reply: reply.into(),
            error: None,
            prompt_tokens: None,
            completion_tokens: None,
        }
    }

    pub fn failure(messages: &[ChatMessage], error: impl Into<String>) -> Self {
        Self {
            error: Some(error.into()),
            ..Self::reply(messages, "")
        }
    }

    fn to_response(&self) -> Result<ChatResponse, TransportError> {
        match &self.error {
            Some(e) => Err(TransportError::Retryable(e.clone())),
            None => Ok(ChatResponse {
                text: self.reply.clone(),
                prompt_tokens: self.prompt_tokens,
                completion_tokens: self.completion_tokens,
                latency_ms: 0,
            }),
        }
    }
}

fn read_entries(path: &Path) -> std::io::Result<Vec<ReplayEntry>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        out.push(entry);
    }
    Ok(out)
}

pub fn write_replay_file(path: &Path, entries: &[ReplayEntry]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(File::create(path)?);
    for e in entries {
        writeln!(f, "{}", serde_json::to_string(e).expect("entry serializes"))?;
    }
    f.flush()
}

/// Serves recorded replies by message-list hash. A missing hash is a
/// fatal error, so a replay run never silently diverges.
#[derive(Debug, Default)]
pub struct ReplayClient {
    entries: HashMap<String, Vec<ReplayEntry>>,
    served: Mutex<HashMap<String, usize>>,
}

impl ReplayClient {
    pub fn new(entries: impl IntoIterator<Item = ReplayEntry>) -> Self {
        let mut map: HashMap<String, Vec<ReplayEntry>> = HashMap::new();
        for e in entries {
            map.entry(e.hash.clone()).or_default().push(e);
        }
        Self {
            entries: map,
            served: Mutex::new(HashMap::new()),
        }
    }

    pub fn from_path(path: &Path) -> std::io::Result<Self> {
        Ok(Self::new(read_entries(path)?))
    }
}

impl ModelClient for ReplayClient {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
        let hash = messages_hash(&request.messages);
        let candidates: Vec<&ReplayEntry> = self
            .entries
            .get(&hash)
            .into_iter()
            .flatten()
            .filter(|e| e.model.as_deref().map_or(true, |m| m == request.model))
            .collect();
        if candidates.is_empty() {
            return Err(TransportError::Fatal(format!("no replay entry for message hash {hash}")));
        }
        let idx = {
            let mut served = self.served.lock().expect("replay counter poisoned");
            let n = served.entry(hash).or_insert(0);
            let i = (*n).min(candidates.len() - 1);
            *n += 1;
            i
        };
        candidates[idx].to_response()
    }
}

/// Wraps a live client; successful replies are appended to a JSON-Lines
/// cache keyed by (model, message-list hash) and never requested again.
pub struct CachedClient<C> {
    inner: C,
    cache: Mutex<HashMap<(String, String), ReplayEntry>>,
    file: Mutex<File>,
    path: PathBuf,
}

impl<C: ModelClient> CachedClient<C> {
    pub fn open(inner: C, path: &Path) -> std::io::Result<Self> {
        let existing = if path.exists() { read_entries(path)? } else { Vec::new() };
        let cache = existing
            .into_iter()
            .filter(|e| e.error.is_none())
            .map(|e| ((e.model.clone().unwrap_or_default(), e.hash.clone()), e))
            .collect();
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            inner,
            cache: Mutex::new(cache),
            file: Mutex::new(file),
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl<C: ModelClient> ModelClient for CachedClient<C> {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
        let key = (request.model.clone(), messages_hash(&request.messages));
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(&key) {
            return hit.to_response();
        }
        let resp = self.inner.chat(request)?;
        let entry = ReplayEntry {
            hash: key.1.clone(),
            model: Some(key.0.clone()),
            reply: resp.text.clone(),
            error: None,
            prompt_tokens: resp.prompt_tokens,
            completion_tokens: resp.completion_tokens,
        };
        {
            let mut f = self.file.lock().expect("cache file poisoned");
            writeln!(f, "{}", serde_json::to_string(&entry).expect("entry serializes"))
                .and_then(|_| f.flush())
                .map_err(|e| TransportError::Fatal(format!("cache write failed: {e}")))?;
        }
        self.cache.lock().expect("cache poisoned").insert(key, entry);
        Ok(resp)
    }
}

pub const API_KEY_ENV: &str = "LICOKIT_API_KEY";

/// Chat-completions style endpoint over HTTP.
pub struct HttpClient {
    endpoint: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        Self {
            endpoint: endpoint.to_string(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

#[derive(Deserialize)]
struct CompletionBody {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

impl ModelClient for HttpClient {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
        let started = Instant::now();
        let mut req = self.agent.post(&self.endpoint).set("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let body = serde_json::to_value(request).expect("request serializes");
        let resp = match req.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(code, r)) => {
                let text = r.into_string().unwrap_or_default();
                let msg = format!("HTTP {code}: {}", text.chars().take(300).collect::<String>());
                return Err(if code == 429 || code >= 500 {
                    TransportError::Retryable(msg)
                } else {
                    TransportError::Fatal(msg)
                });
            }
            Err(e) => return Err(TransportError::Retryable(e.to_string())),
        };
        let parsed: CompletionBody = resp
            .into_json()
            .map_err(|e| TransportError::Fatal(format!("malformed response body: {e}")))?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();
        Ok(ChatResponse {
            text,
            prompt_tokens: parsed.usage.as_ref().and_then(|u| u.prompt_tokens),
            completion_tokens: parsed.usage.as_ref().and_then(|u| u.completion_tokens),
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay_ms: 500,
            max_delay_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        let ms = self.base_delay_ms.saturating_mul(1u64 << attempt.min(20));
        Duration::from_millis(ms.min(self.max_delay_ms))
    }
}

/// Spaces request starts at least `min_interval` apart across threads.
#[derive(Debug)]
pub struct RateLimiter {
    min_interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(min_interval: Duration) -> Self {
        Self {
            min_interval,
            next: Mutex::new(None),
        }
    }

    pub fn unlimited() -> Self {
        Self::new(Duration::ZERO)
    }

    pub fn acquire(&self) {
        if self.min_interval.is_zero() {
            return;
        }
        let wait = {
            let mut next = self.next.lock().expect("rate limiter poisoned");
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.min_interval);
            slot - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

/// Sends `request`, retrying retryable failures with exponential backoff.
pub fn chat_with_retries(
    client: &dyn ModelClient,
    request: &ChatRequest,
    policy: &RetryPolicy,
    limiter: &RateLimiter,
) -> Result<ChatResponse, TransportError> {
    let mut attempt = 0;
    loop {
        limiter.acquire();
        match client.chat(request) {
            Ok(r) => return Ok(r),
            Err(TransportError::Retryable(msg)) if attempt >= policy.max_retries => {
                return Err(TransportError::Retryable(format!("{msg} (gave up after {} attempts)", attempt + 1)))
            }
            Err(TransportError::Retryable(_)) => {
                std::thread::sleep(policy.delay(attempt));
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}
