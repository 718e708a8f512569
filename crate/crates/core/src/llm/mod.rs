//! Chat-completion backends.
//!
//! Every request names the agent role that issues it, so a run can use a
//! different model per role and scripted transcripts can check that calls
//! arrive in the expected order.

mod http;
mod scripted;

use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use http::{HttpBackend, API_KEY_ENV};
pub use scripted::{read_transcript, write_transcript, RecordingBackend, ScriptedBackend, TranscriptEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentRole {
    Parser,
    Coder,
    Evaluator,
}

impl AgentRole {
    pub const ALL: [AgentRole; 3] = [AgentRole::Parser, AgentRole::Coder, AgentRole::Evaluator];

    pub fn name(self) -> &'static str {
        match self {
            AgentRole::Parser => "parser",
            AgentRole::Coder => "coder",
            AgentRole::Evaluator => "evaluator",
        }
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: MessageRole,
    pub text: String,
    /// PNG-encoded images.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<Vec<u8>>,
}

impl ChatMessage {
    pub fn system(text: impl Into<String>) -> Self {
        Self {
            role: MessageRole::System,
            text: text.into(),
            images: Vec::new(),
        }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self {
            role: MessageRole::User,
            text: text.into(),
            images: Vec::new(),
        }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self {
            role: MessageRole::Assistant,
            text: text.into(),
            images: Vec::new(),
        }
    }

    pub fn with_images(mut self, images: Vec<Vec<u8>>) -> Self {
        self.images = images;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub agent: AgentRole,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    pub fn new(agent: AgentRole, messages: Vec<ChatMessage>) -> Self {
        Self { agent, messages }
    }

    /// SHA-256 over the role, message texts and image digests.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.agent.name().as_bytes());
        for m in &self.messages {
            h.update([0u8]);
            h.update(format!("{:?}", m.role).as_bytes());
            h.update([0u8]);
            h.update(m.text.as_bytes());
            for img in &m.images {
                h.update([1u8]);
                h.update(Sha256::digest(img));
            }
        }
        hex(&h.finalize())
    }

    pub fn image_count(&self) -> usize {
        self.messages.iter().map(|m| m.images.len()).sum()
    }

    /// All message texts, for logs.
    pub fn transcript_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| format!("[{:?}]\n{}", m.role, m.text))
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// First retry delay; doubles on each further retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
}

fn default_temperature() -> f64 {
    0.5
}
fn default_retries() -> u32 {
    3
}
fn default_timeout() -> u64 {
    120
}
fn default_backoff() -> u64 {
    500
}

impl BackendConfig {
    pub fn new(endpoint: &str, model: &str) -> Self {
        Self {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            temperature: default_temperature(),
            max_retries: default_retries(),
            timeout_secs: default_timeout(),
            backoff_ms: default_backoff(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::Config(format!(
                "temperature must be within [0, 2], got {}",
                self.temperature
            )));
        }
        if self.endpoint.is_empty() || self.model.is_empty() {
            return Err(LlmError::Config("endpoint and model must be set".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("scripted transcript exhausted at a {0} call")]
    ScriptExhausted(AgentRole),
    #[error("scripted transcript mismatch at entry {index}: {detail}")]
    ScriptMismatch { index: usize, detail: String },
    #[error("backend configuration: {0}")]
    Config(String),
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError>;

    /// Whether concurrent calls may be issued. Replay backends depend on
    /// call order and say no.
    fn supports_parallel(&self) -> bool {
        true
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        (**self).complete(req)
    }
    fn supports_parallel(&self) -> bool {
        (**self).supports_parallel()
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        (**self).complete(req)
    }
    fn supports_parallel(&self) -> bool {
        (**self).supports_parallel()
    }
}

type Handler = dyn Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync;

/// Backend driven by a closure; records every request.
pub struct FnBackend {
    handler: Box<Handler>,
    log: Mutex<Vec<ChatRequest>>,
    parallel: bool,
}

impl FnBackend {
    pub fn new(handler: impl Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync + 'static) -> Self {
        Self {
            handler: Box::new(handler),
            log: Mutex::new(Vec::new()),
            parallel: false,
        }
    }

    pub fn parallel(mut self, yes: bool) -> Self {
        self.parallel = yes;
        self
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.log.lock().expect("log lock").clone()
    }

    pub fn count(&self, role: AgentRole) -> usize {
        self.log.lock().expect("log lock").iter().filter(|r| r.agent == role).count()
    }
}

impl ChatBackend for FnBackend {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        self.log.lock().expect("log lock").push(req.clone());
        (self.handler)(req)
    }

    fn supports_parallel(&self) -> bool {
        self.parallel
    }
}

/// Body of the first fenced block whose info string starts with `tag`
/// (any block when `tag` is `None`). Without a usable fence the whole reply
/// is returned together with a warning.
pub fn extract_code_block(reply: &str, tag: Option<&str>) -> (String, Option<String>) {
    let blocks = fenced_blocks(reply);
    let wanted = |info: &str| match tag {
        None => true,
        Some(t) => info.split_whitespace().next().is_some_and(|w| w.eq_ignore_ascii_case(t)),
    };
    if let Some(b) = blocks.iter().find(|b| wanted(&b.info)) {
        let warning = (!b.closed).then(|| "code block is not closed; using the rest of the reply".to_string());
        return (b.body.clone(), warning);
    }
    if let Some(b) = blocks.first() {
        let t = tag.unwrap_or_default();
        return (
            b.body.clone(),
            Some(format!("no '{t}' code block found; using the first code block")),
        );
    }
    (
        reply.trim().to_string(),
        Some("reply has no fenced code block; using the whole reply".into()),
    )
}

struct Block {
    info: String,
    body: String,
    closed: bool,
}

fn fenced_blocks(text: &str) -> Vec<Block> {
    let mut out = Vec::new();
    let mut lines = text.lines();
    while let Some(line) = lines.next() {
        let t = line.trim_start();
        if !t.starts_with("```") {
            continue;
        }
        let ticks = t.chars().take_while(|&c| c == '`').count();
        let info = t[ticks..].trim().to_string();
        let mut body = Vec::new();
        let mut closed = false;
        for l in lines.by_ref() {
            let lt = l.trim();
            if lt.len() >= ticks && lt.chars().all(|c| c == '`') {
                closed = true;
                break;
            }
            body.push(l);
        }
        let mut b = body.join("\n");
        if !b.is_empty() {
            b.push('\n');
        }
        out.push(Block { info, body: b, closed });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_block() {
        let (b, w) = extract_code_block("Here:\n```jsonl\n{\"a\":1}\n```\nbye", Some("jsonl"));
        assert_eq!(b, "{\"a\":1}\n");
        assert!(w.is_none());
    }

    #[test]
    fn first_matching_block() {
        let r = "```python\nx\n```\n```dsl\nfirst\n```\n```dsl\nsecond\n```";
        assert_eq!(extract_code_block(r, Some("dsl")).0, "first\n");
        assert_eq!(extract_code_block(r, None).0, "x\n");
        let (b, w) = extract_code_block(r, Some("jsonl"));
        assert_eq!(b, "x\n");
        assert!(w.is_some());
    }

    #[test]
    fn fence_free() {
        let (b, w) = extract_code_block("  cube()  \n", Some("dsl"));
        assert_eq!(b, "cube()");
        assert!(w.unwrap().contains("no fenced code block"));
    }

    #[test]
    fn unclosed() {
        let (b, w) = extract_code_block("```dsl\ncube()\nsphere()", Some("dsl"));
        assert_eq!(b, "cube()\nsphere()\n");
        assert!(w.is_some());
    }

    #[test]
    fn digest_depends_on_content() {
        let a = ChatRequest::new(AgentRole::Coder, vec![ChatMessage::user("hi")]);
        let b = ChatRequest::new(AgentRole::Evaluator, vec![ChatMessage::user("hi")]);
        let c = ChatRequest::new(AgentRole::Coder, vec![ChatMessage::user("hi").with_images(vec![vec![1, 2]])]);
        assert_ne!(a.digest(), b.digest());
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest(), a.clone().digest());
        assert_eq!(a.digest().len(), 64);
    }
}
