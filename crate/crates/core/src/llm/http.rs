use std::collections::BTreeMap;
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};

use super::{AgentRole, BackendConfig, ChatBackend, ChatMessage, ChatRequest, LlmError, MessageRole};

pub const API_KEY_ENV: &str = "SHAPECRAFT_API_KEY";

/// OpenAI-compatible `/chat/completions` client, one config per role.
pub struct HttpBackend {
    configs: BTreeMap<AgentRole, BackendConfig>,
    clients: BTreeMap<AgentRole, reqwest::blocking::Client>,
    key: String,
    trace: bool,
}

impl HttpBackend {
    /// Reads the key from `SHAPECRAFT_API_KEY`.
    pub fn from_env(configs: BTreeMap<AgentRole, BackendConfig>, trace: bool) -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_ENV).unwrap_or_default();
        if key.trim().is_empty() {
            return Err(LlmError::Auth(format!("{API_KEY_ENV} is not set")));
        }
        Self::with_key(configs, key.trim(), trace)
    }

    pub fn with_key(configs: BTreeMap<AgentRole, BackendConfig>, key: &str, trace: bool) -> Result<Self, LlmError> {
        let mut clients = BTreeMap::new();
        for (role, cfg) in &configs {
            cfg.validate()?;
            let client = reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(cfg.timeout_secs.max(1)))
                .build()
                .map_err(|e| LlmError::Config(format!("http client: {e}")))?;
            clients.insert(*role, client);
        }
        Ok(Self {
            configs,
            clients,
            key: key.to_string(),
            trace,
        })
    }

    fn url(cfg: &BackendConfig) -> String {
        let base = cfg.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    fn redact(&self, s: &str) -> String {
        if self.key.is_empty() {
            s.to_string()
        } else {
            s.replace(&self.key, "***")
        }
    }
}

fn message_json(m: &ChatMessage, inline_images: bool) -> Value {
    let role = match m.role {
        MessageRole::System => "system",
        MessageRole::User => "user",
        MessageRole::Assistant => "assistant",
    };
    if m.images.is_empty() {
        return json!({ "role": role, "content": m.text });
    }
    let mut parts = vec![json!({ "type": "text", "text": m.text })];
    for img in &m.images {
        let url = if inline_images {
            format!(
                "data:image/png;base64,{}",
                base64::engine::general_purpose::STANDARD.encode(img)
            )
        } else {
            format!("<png, {} bytes>", img.len())
        };
        parts.push(json!({ "type": "image_url", "image_url": { "url": url } }));
    }
    json!({ "role": role, "content": parts })
}

fn request_body(cfg: &BackendConfig, req: &ChatRequest, inline_images: bool) -> Value {
    json!({
        "model": cfg.model,
        "temperature": cfg.temperature,
        "messages": req.messages.iter().map(|m| message_json(m, inline_images)).collect::<Vec<_>>(),
    })
}

fn reply_text(body: &Value) -> Option<String> {
    let content = body.get("choices")?.get(0)?.get("message")?.get("content")?;
    match content {
        Value::String(s) => Some(s.clone()),
        Value::Array(parts) => Some(
            parts
                .iter()
                .filter_map(|p| p.get("text").and_then(Value::as_str))
                .collect::<Vec<_>>()
                .join(""),
        ),
        _ => None,
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        if req.messages.is_empty() {
            return Err(LlmError::Config("request has no messages".into()));
        }
        let cfg = self
            .configs
            .get(&req.agent)
            .ok_or_else(|| LlmError::Config(format!("no backend configured for the {} role", req.agent)))?;
        let client = &self.clients[&req.agent];
        let url = Self::url(cfg);
        let body = request_body(cfg, req, true);
        if self.trace {
            log::info!(target: "shapecraft::trace", "POST {url} ({})\n{}", req.agent, self.redact(&request_body(cfg, req, false).to_string()));
        }
        let mut last = String::new();
        for attempt in 0..=cfg.max_retries {
            if attempt > 0 {
                let delay = cfg.backoff_ms.saturating_mul(1u64 << (attempt - 1).min(16));
                log::warn!("{} call failed ({last}); retry {attempt}/{} in {delay} ms", req.agent, cfg.max_retries);
                std::thread::sleep(Duration::from_millis(delay));
            }
            let resp = match client.post(&url).bearer_auth(&self.key).json(&body).send() {
                Ok(r) => r,
                Err(e) => {
                    last = self.redact(&e.to_string());
                    continue;
                }
            };
            let status = resp.status();
            let text = resp.text().unwrap_or_default();
            if self.trace {
                log::info!(target: "shapecraft::trace", "HTTP {status}\n{}", self.redact(&text));
            }
            if status.as_u16() == 401 || status.as_u16() == 403 {
                return Err(LlmError::Auth(format!("HTTP {status}")));
            }
            if status.as_u16() == 429 || status.is_server_error() {
                last = format!("HTTP {status}");
                continue;
            }
            if !status.is_success() {
                return Err(LlmError::Transport(format!("HTTP {status}: {}", snippet(&self.redact(&text)))));
            }
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| LlmError::MalformedResponse(format!("{e}: {}", snippet(&text))))?;
            return reply_text(&v)
                .ok_or_else(|| LlmError::MalformedResponse(format!("no choices[0].message.content in {}", snippet(&text))));
        }
        Err(LlmError::Transport(format!(
            "giving up after {} attempts: {last}",
            cfg.max_retries + 1
        )))
    }
}

fn snippet(s: &str) -> String {
    let t: String = s.chars().take(200).collect();
    if t.len() < s.len() {
        format!("{t}...")
    } else {
        t
    }
}
