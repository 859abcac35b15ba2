//! Language-model providers: a null provider, a recorded-fixture replayer,
//! a recorder, and an HTTP chat-completion client.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::prompt::PromptSequence;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("no provider configured")]
    Disabled,
    #[error("no recorded response for request {0}")]
    NoFixture(String),
    #[error("provider timed out")]
    Timeout,
    #[error("provider transport error: {0}")]
    Transport(String),
}

pub trait LlmProvider: Send + Sync {
    fn name(&self) -> &str;

    fn send(&self, prompt: &PromptSequence, timeout: Duration) -> Result<String, ProviderError>;

    /// True for the provider that never answers; binding goes straight to the fallback.
    fn is_null(&self) -> bool {
        false
    }
}

pub struct NullProvider;

impl LlmProvider for NullProvider {
    fn name(&self) -> &str {
        "null"
    }

    fn send(&self, _: &PromptSequence, _: Duration) -> Result<String, ProviderError> {
        Err(ProviderError::Disabled)
    }

    fn is_null(&self) -> bool {
        true
    }
}

/// Request key: hex SHA-256 over the output template, task table and task
/// text, truncated to 16 characters. Example selection is not part of the
/// key, so a regenerated prompt maps to the same recording.
pub fn request_key(prompt: &PromptSequence) -> String {
    request_key_parts(&prompt.output_template, &prompt.task_table, &prompt.task_text)
}

pub fn request_key_parts(template: &str, table: &str, text: &str) -> String {
    let mut h = Sha256::new();
    for part in [template, table, text] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())[..16].to_string()
}

/// Replays responses from a directory. A request with key `K` is answered by
/// `K.txt`, or by `K.1.txt`, `K.2.txt`, ... in turn on repeated requests
/// (the last file repeats once the sequence is exhausted).
pub struct FixtureProvider {
    dir: PathBuf,
    calls: Mutex<HashMap<String, usize>>,
}

impl FixtureProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            calls: Mutex::new(HashMap::new()),
        }
    }

    fn responses(&self, key: &str) -> Vec<PathBuf> {
        let single = self.dir.join(format!("{key}.txt"));
        let mut numbered = Vec::new();
        for n in 1.. {
            let p = self.dir.join(format!("{key}.{n}.txt"));
            if !p.exists() {
                break;
            }
            numbered.push(p);
        }
        if numbered.is_empty() && single.exists() {
            numbered.push(single);
        }
        numbered
    }
}

impl LlmProvider for FixtureProvider {
    fn name(&self) -> &str {
        "fixture"
    }

    fn send(&self, prompt: &PromptSequence, _: Duration) -> Result<String, ProviderError> {
        let key = request_key(prompt);
        let files = self.responses(&key);
        if files.is_empty() {
            return Err(ProviderError::NoFixture(key));
        }
        let n = {
            let mut calls = self.calls.lock().expect("fixture call counter");
            let c = calls.entry(key.clone()).or_default();
            let n = *c;
            *c += 1;
            n
        };
        std::fs::read_to_string(&files[n.min(files.len() - 1)]).map_err(|e| ProviderError::Transport(e.to_string()))
    }
}

/// Caps the number of concurrent calls to the wrapped provider.
pub struct LimitedProvider<P> {
    inner: P,
    limit: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl<P: LlmProvider> LimitedProvider<P> {
    /// `limit` is clamped to at least 1.
    pub fn new(inner: P, limit: usize) -> Self {
        Self {
            inner,
            limit: limit.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }
}

impl<P: LlmProvider> LlmProvider for LimitedProvider<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn send(&self, prompt: &PromptSequence, timeout: Duration) -> Result<String, ProviderError> {
        {
            let mut n = self.in_flight.lock().expect("in-flight counter");
            while *n >= self.limit {
                n = self.freed.wait(n).expect("in-flight counter");
            }
            *n += 1;
        }
        let out = self.inner.send(prompt, timeout);
        *self.in_flight.lock().expect("in-flight counter") -= 1;
        self.freed.notify_one();
        out
    }

    fn is_null(&self) -> bool {
        self.inner.is_null()
    }
}

impl LlmProvider for Box<dyn LlmProvider> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn send(&self, prompt: &PromptSequence, timeout: Duration) -> Result<String, ProviderError> {
        (**self).send(prompt, timeout)
    }

    fn is_null(&self) -> bool {
        (**self).is_null()
    }
}

/// Forwards to another provider and stores each answer as a numbered fixture.
pub struct RecordingProvider<P> {
    inner: P,
    dir: PathBuf,
}

impl<P: LlmProvider> RecordingProvider<P> {
    pub fn new(inner: P, dir: impl Into<PathBuf>) -> Self {
        Self { inner, dir: dir.into() }
    }
}

impl<P: LlmProvider> LlmProvider for RecordingProvider<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn send(&self, prompt: &PromptSequence, timeout: Duration) -> Result<String, ProviderError> {
        let answer = self.inner.send(prompt, timeout)?;
        let key = request_key(prompt);
        let io = |e: std::io::Error| ProviderError::Transport(e.to_string());
        std::fs::create_dir_all(&self.dir).map_err(io)?;
        let n = (1..).find(|n| !self.dir.join(format!("{key}.{n}.txt")).exists()).expect("unbounded");
        std::fs::write(self.dir.join(format!("{key}.{n}.txt")), &answer).map_err(io)?;
        Ok(answer)
    }
}

/// OpenAI-style chat completion endpoint.
pub struct HttpProvider {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

pub const ENV_ENDPOINT: &str = "NARRACHART_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "NARRACHART_LLM_MODEL";
pub const ENV_KEY_VAR: &str = "NARRACHART_LLM_KEY_VAR";

impl HttpProvider {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
            client: reqwest::blocking::Client::new(),
        }
    }

    /// Reads the endpoint and model from the environment. The API key is read
    /// from the variable named by `NARRACHART_LLM_KEY_VAR` (default `OPENAI_API_KEY`).
    pub fn from_env() -> Result<Self, ProviderError> {
        let endpoint = std::env::var(ENV_ENDPOINT)
            .map_err(|_| ProviderError::Transport(format!("{ENV_ENDPOINT} is not set")))?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "gpt-3.5-turbo".to_string());
        let key_var = std::env::var(ENV_KEY_VAR).unwrap_or_else(|_| "OPENAI_API_KEY".to_string());
        Ok(Self::new(endpoint, model, std::env::var(key_var).ok()))
    }
}

impl LlmProvider for HttpProvider {
    fn name(&self) -> &str {
        "http"
    }

    fn send(&self, prompt: &PromptSequence, timeout: Duration) -> Result<String, ProviderError> {
        let body = serde_json::json!({
            "model": self.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": prompt.system_instruction},
                {"role": "user", "content": prompt.render_user()},
            ],
        });
        let mut req = self.client.post(&self.endpoint).timeout(timeout).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout
            } else {
                ProviderError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        let value: serde_json::Value = resp.json().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(ProviderError::Transport(format!("HTTP {status}: {value}")));
        }
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Transport("response has no message content".into()))
    }
}

/// Provider selection by name: `null`, `fixture` (needs a directory) or `http`.
pub fn provider_from_name(name: &str, fixture_dir: Option<&Path>) -> Result<Box<dyn LlmProvider>, String> {
    match name {
        "null" | "none" => Ok(Box::new(NullProvider)),
        "fixture" => {
            let dir = fixture_dir.ok_or("the fixture provider needs a fixture directory")?;
            if !dir.is_dir() {
                return Err(format!("fixture directory {} does not exist", dir.display()));
            }
            Ok(Box::new(FixtureProvider::new(dir)))
        }
        "http" => HttpProvider::from_env().map(|p| Box::new(p) as Box<dyn LlmProvider>).map_err(|e| e.to_string()),
        other => Err(format!("unknown provider {other:?} (expected null, fixture or http)")),
    }
}
