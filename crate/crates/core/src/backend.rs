//! Completion backends: scripted mock, transcript replay, recording wrapper
//! and a live chat-completion client.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::prompting::{reply_json, LlmReply, PromptKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub endpoint_url: String,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_seconds: u64,
    /// Name of the environment variable holding the API key.
    pub api_key_source: String,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint_url: "https://api.openai.com/v1/chat/completions".to_string(),
            model_id: "gpt-4".to_string(),
            temperature: 0.0,
            max_tokens: 2048,
            timeout_seconds: 120,
            api_key_source: "OPENAI_API_KEY".to_string(),
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if self.timeout_seconds == 0 {
            return Err("timeout must be positive".to_string());
        }
        Ok(())
    }
}

/// One completion call. `segment` is the segment id for proof and repair
/// prompts and the boundary index for postcondition prompts; `attempt`
/// counts earlier calls with the same kind and segment.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: String,
    pub kind: PromptKind,
    pub segment: usize,
    pub attempt: usize,
    pub temperature: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("network error: {message}")]
    Network { message: String, retryable: bool },
    #[error("no transcript entry for prompt starting {prompt_head:?}")]
    MissingTranscript { prompt_head: String },
    #[error("mock script has no reply for {kind} segment {segment} attempt {attempt}")]
    ScriptExhausted { kind: PromptKind, segment: usize, attempt: usize },
    #[error("API key variable {0} is not set")]
    MissingApiKey(String),
    #[error("invalid {what} {path}: {message}")]
    BadFile { what: &'static str, path: PathBuf, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub trait Backend: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError>;
}

/// Hex SHA-256 over model, temperature and prompt.
pub fn fingerprint(model_id: &str, temperature: f64, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model_id.as_bytes());
    h.update([0]);
    h.update(format!("{temperature:?}").as_bytes());
    h.update([0]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub fingerprint: String,
    pub model_id: String,
    pub temperature: f64,
    pub prompt: String,
    pub response: String,
    pub timestamp: String,
}

impl TranscriptRecord {
    pub fn new(model_id: &str, temperature: f64, prompt: &str, response: &str, timestamp: String) -> Self {
        TranscriptRecord {
            fingerprint: fingerprint(model_id, temperature, prompt),
            model_id: model_id.to_string(),
            temperature,
            prompt: prompt.to_string(),
            response: response.to_string(),
            timestamp,
        }
    }
}

fn prompt_head(prompt: &str) -> String {
    prompt.chars().take(80).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MockEntry {
    kind: PromptKind,
    segment: usize,
    #[serde(default)]
    attempt: usize,
    /// Raw reply text.
    response: Option<String>,
    /// Alternative to `response`: the two reply fields, serialized in the
    /// JSON shape the prompt asks for.
    thoughts: Option<String>,
    payload: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MockFile {
    #[serde(default)]
    reply: Vec<MockEntry>,
}

/// Replies keyed by (kind, segment, attempt), independent of prompt text.
#[derive(Debug, Default)]
pub struct MockBackend {
    replies: HashMap<(PromptKind, usize, usize), String>,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_reply(mut self, kind: PromptKind, segment: usize, attempt: usize, response: impl Into<String>) -> Self {
        self.replies.insert((kind, segment, attempt), response.into());
        self
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let bad = |message: String| BackendError::BadFile { what: "mock script", path: path.to_path_buf(), message };
        let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        let file: MockFile = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
        let mut mock = MockBackend::new();
        for e in file.reply {
            let key = (e.kind, e.segment, e.attempt);
            let response = match (e.response, e.payload) {
                (Some(r), None) if e.thoughts.is_none() => r,
                (None, Some(payload)) => {
                    let reply = LlmReply { thoughts: e.thoughts.unwrap_or_default(), payload };
                    reply_json(&reply, e.kind.response_schema())
                }
                _ => return Err(bad(format!("{} segment {} attempt {}: give `response` or `payload`", key.0, key.1, key.2))),
            };
            if mock.replies.insert(key, response).is_some() {
                return Err(bad(format!("duplicate reply for {} segment {} attempt {}", key.0, key.1, key.2)));
            }
        }
        Ok(mock)
    }
}

impl Backend for MockBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        self.replies.get(&(req.kind, req.segment, req.attempt)).cloned().ok_or(BackendError::ScriptExhausted {
            kind: req.kind,
            segment: req.segment,
            attempt: req.attempt,
        })
    }
}

/// Serves responses from a transcript file by request fingerprint.
#[derive(Debug)]
pub struct ReplayBackend {
    model_id: String,
    responses: HashMap<String, String>,
}

impl ReplayBackend {
    pub fn from_records(model_id: &str, records: Vec<TranscriptRecord>) -> Result<Self, String> {
        let mut responses: HashMap<String, String> = HashMap::new();
        for (i, r) in records.into_iter().enumerate() {
            let expect = fingerprint(&r.model_id, r.temperature, &r.prompt);
            if expect != r.fingerprint {
                return Err(format!("record {}: fingerprint does not match its fields", i + 1));
            }
            match responses.get(&r.fingerprint) {
                Some(prev) if *prev != r.response => {
                    return Err(format!("record {}: fingerprint {} already recorded with a different response", i + 1, r.fingerprint))
                }
                Some(_) => {}
                None => {
                    responses.insert(r.fingerprint, r.response);
                }
            }
        }
        Ok(ReplayBackend { model_id: model_id.to_string(), responses })
    }

    pub fn load(model_id: &str, path: &Path) -> Result<Self, BackendError> {
        let bad = |message: String| BackendError::BadFile { what: "transcript", path: path.to_path_buf(), message };
        let records = read_transcript(path).map_err(bad)?;
        Self::from_records(model_id, records).map_err(bad)
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptRecord>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

impl Backend for ReplayBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        let fp = fingerprint(&self.model_id, req.temperature, &req.prompt);
        self.responses
            .get(&fp)
            .cloned()
            .ok_or_else(|| BackendError::MissingTranscript { prompt_head: prompt_head(&req.prompt) })
    }
}

/// Passes calls through and appends every exchange to a transcript file.
pub struct RecordingBackend<B> {
    inner: B,
    model_id: String,
    path: PathBuf,
    clock: fn() -> String,
}

// Shared by all recorders so programs run in parallel can append to one file.
static TRANSCRIPT_LOCK: Mutex<()> = Mutex::new(());

pub fn now_iso8601() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B, model_id: &str, path: impl Into<PathBuf>) -> Self {
        RecordingBackend { inner, model_id: model_id.to_string(), path: path.into(), clock: now_iso8601 }
    }

    pub fn with_clock(mut self, clock: fn() -> String) -> Self {
        self.clock = clock;
        self
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        let response = self.inner.complete(req)?;
        let rec = TranscriptRecord::new(&self.model_id, req.temperature, &req.prompt, &response, (self.clock)());
        let line = serde_json::to_string(&rec).expect("transcript record serializes");
        let _guard = TRANSCRIPT_LOCK.lock().unwrap_or_else(|e| e.into_inner());
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        writeln!(f, "{line}")?;
        Ok(response)
    }
}

impl Backend for Box<dyn Backend> {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        (**self).complete(req)
    }
}

const SYSTEM_MESSAGE: &str = "You are an experienced formal language programmer. You are very familiar with Verus, a tool for verifying the correctness of Rust code.";

/// Chat-completion client. The request temperature overrides the config.
pub struct LiveBackend {
    cfg: BackendConfig,
    api_key: String,
    client: reqwest::blocking::Client,
    max_retries: u32,
}

impl LiveBackend {
    pub fn new(cfg: BackendConfig) -> Result<Self, BackendError> {
        let api_key =
            std::env::var(&cfg.api_key_source).map_err(|_| BackendError::MissingApiKey(cfg.api_key_source.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_seconds))
            .build()
            .map_err(|e| BackendError::Network { message: e.to_string(), retryable: false })?;
        Ok(LiveBackend { cfg, api_key, client, max_retries: 2 })
    }

    fn request_once(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        let body = serde_json::json!({
            "model": self.cfg.model_id,
            "temperature": req.temperature,
            "max_tokens": self.cfg.max_tokens,
            "messages": [
                {"role": "system", "content": SYSTEM_MESSAGE},
                {"role": "user", "content": req.prompt},
            ],
        });
        let resp = self
            .client
            .post(&self.cfg.endpoint_url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| BackendError::Network { message: e.to_string(), retryable: true })?;
        let status = resp.status();
        if !status.is_success() {
            let retryable = status.is_server_error() || status.as_u16() == 429;
            return Err(BackendError::Network { message: format!("HTTP {status}"), retryable });
        }
        let v: serde_json::Value =
            resp.json().map_err(|e| BackendError::Network { message: e.to_string(), retryable: false })?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| BackendError::Network { message: "response has no message content".into(), retryable: false })
    }
}

impl Backend for LiveBackend {
    fn complete(&self, req: &CompletionRequest) -> Result<String, BackendError> {
        let mut tries = 0;
        loop {
            match self.request_once(req) {
                Err(BackendError::Network { message, retryable: true }) if tries < self.max_retries => {
                    tries += 1;
                    log::warn!("retrying completion after network error: {message}");
                    std::thread::sleep(Duration::from_secs(1 << tries));
                }
                other => return other,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(kind: PromptKind, segment: usize, attempt: usize, temperature: f64) -> CompletionRequest {
        CompletionRequest { prompt: format!("prompt {kind} {segment}"), kind, segment, attempt, temperature }
    }

    #[test]
    fn fingerprint_depends_on_temperature() {
        assert_ne!(fingerprint("m", 0.0, "p"), fingerprint("m", 0.5, "p"));
        assert_ne!(fingerprint("m", 0.0, "p"), fingerprint("n", 0.0, "p"));
        assert_eq!(fingerprint("m", 0.0, "p"), fingerprint("m", 0.0, "p"));
    }

    #[test]
    fn mock_lookup_and_exhaustion() {
        let m = MockBackend::new().with_reply(PromptKind::Proof, 1, 0, "a");
        assert_eq!(m.complete(&req(PromptKind::Proof, 1, 0, 0.0)).unwrap(), "a");
        assert!(matches!(m.complete(&req(PromptKind::Proof, 1, 1, 0.0)), Err(BackendError::ScriptExhausted { .. })));
    }

    #[test]
    fn mock_script_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.toml");
        std::fs::write(&p, "[[reply]]\nkind = \"repair\"\nsegment = 2\nattempt = 1\nresponse = '''x'''\n").unwrap();
        let m = MockBackend::load(&p).unwrap();
        assert_eq!(m.complete(&req(PromptKind::Repair, 2, 1, 0.0)).unwrap(), "x");
        std::fs::write(&p, "[[reply]]\nkind = \"proof\"\nsegment = 0\nresponse = 'a'\n[[reply]]\nkind = \"proof\"\nsegment = 0\nresponse = 'b'\n").unwrap();
        assert!(MockBackend::load(&p).is_err());
    }

    #[test]
    fn replay_hit_and_miss() {
        let r = req(PromptKind::Proof, 0, 0, 0.0);
        let rec = TranscriptRecord::new("m", 0.0, &r.prompt, "stored", "t".into());
        let replay = ReplayBackend::from_records("m", vec![rec]).unwrap();
        assert_eq!(replay.complete(&r).unwrap(), "stored");
        let long = CompletionRequest { prompt: "y".repeat(200), ..r.clone() };
        match replay.complete(&long) {
            Err(BackendError::MissingTranscript { prompt_head }) => assert_eq!(prompt_head.len(), 80),
            other => panic!("{other:?}"),
        }
        let hot = CompletionRequest { temperature: 0.5, ..r };
        assert!(replay.complete(&hot).is_err());
    }

    #[test]
    fn replay_rejects_conflicts_and_tampering() {
        let a = TranscriptRecord::new("m", 0.0, "p", "one", "t".into());
        let b = TranscriptRecord::new("m", 0.0, "p", "two", "t".into());
        assert!(ReplayBackend::from_records("m", vec![a.clone(), a.clone()]).is_ok());
        assert!(ReplayBackend::from_records("m", vec![a.clone(), b]).is_err());
        let mut t = a;
        t.prompt.push('!');
        assert!(ReplayBackend::from_records("m", vec![t]).is_err());
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let mock = MockBackend::new().with_reply(PromptKind::Proof, 0, 0, "r0").with_reply(PromptKind::Proof, 0, 1, "r1");
        let rec = RecordingBackend::new(mock, "m", &path).with_clock(|| "2026-01-01T00:00:00Z".into());
        let calls = [req(PromptKind::Proof, 0, 0, 0.0), CompletionRequest { attempt: 1, temperature: 0.5, ..req(PromptKind::Proof, 0, 0, 0.0) }];
        let live: Vec<String> = calls.iter().map(|c| rec.complete(c).unwrap()).collect();
        let before = std::fs::read(&path).unwrap();
        let replay = ReplayBackend::load("m", &path).unwrap();
        let again: Vec<String> = calls.iter().map(|c| replay.complete(c).unwrap()).collect();
        assert_eq!(live, again);
        assert_eq!(std::fs::read(&path).unwrap(), before);
        assert_eq!(replay.len(), 2);
    }

    #[test]
    fn config_validation() {
        assert!(BackendConfig::default().validate().is_ok());
        assert!(BackendConfig { temperature: 2.5, ..Default::default() }.validate().is_err());
        assert!(BackendConfig { timeout_seconds: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn live_needs_key() {
        let cfg = BackendConfig { api_key_source: "INVSYNTH_TEST_UNSET_KEY_VAR".into(), ..Default::default() };
        assert!(matches!(LiveBackend::new(cfg), Err(BackendError::MissingApiKey(_))));
    }
}
