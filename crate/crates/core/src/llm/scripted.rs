use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{AgentRole, ChatBackend, ChatRequest, LlmError};

/// One line of a transcript: the role that must issue the call, optionally
/// the prompt digest it must have, and the reply to give.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub role: AgentRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_sha256: Option<String>,
    pub response: String,
}

impl TranscriptEntry {
    pub fn new(role: AgentRole, response: impl Into<String>) -> Self {
        Self {
            role,
            prompt_sha256: None,
            response: response.into(),
        }
    }
}

pub fn read_transcript(text: &str) -> Result<Vec<TranscriptEntry>, LlmError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let e: TranscriptEntry = serde_json::from_str(line)
            .map_err(|e| LlmError::Config(format!("transcript line {}: {e}", i + 1)))?;
        out.push(e);
    }
    Ok(out)
}

pub fn write_transcript(entries: &[TranscriptEntry]) -> String {
    let mut s = String::new();
    for e in entries {
        s.push_str(&serde_json::to_string(e).expect("plain data serializes"));
        s.push('\n');
    }
    s
}

/// Replays a transcript in order. A call from the wrong role, a digest
/// mismatch or running past the end is an error.
pub struct ScriptedBackend {
    queue: Mutex<(usize, VecDeque<TranscriptEntry>)>,
}

impl ScriptedBackend {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        Self {
            queue: Mutex::new((0, entries.into())),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Config(format!("cannot read transcript {}: {e}", path.display())))?;
        Ok(Self::new(read_transcript(&text)?))
    }

    pub fn remaining(&self) -> usize {
        self.queue.lock().expect("queue lock").1.len()
    }

    pub fn consumed(&self) -> usize {
        self.queue.lock().expect("queue lock").0
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let mut q = self.queue.lock().expect("queue lock");
        let index = q.0;
        let Some(entry) = q.1.front() else {
            return Err(LlmError::ScriptExhausted(req.agent));
        };
        let digest = req.digest();
        let fits = |e: &TranscriptEntry| e.role == req.agent && e.prompt_sha256.as_ref().is_none_or(|d| *d == digest);
        let pos = if fits(entry) {
            0
        } else {
            // A log recorded from concurrent calls is in completion order;
            // fall back to the first unused entry with this exact prompt.
            match q.1.iter().position(|e| e.role == req.agent && e.prompt_sha256.as_deref() == Some(digest.as_str())) {
                Some(p) => p,
                None if entry.role != req.agent => {
                    return Err(LlmError::ScriptMismatch {
                        index,
                        detail: format!("transcript expects a {} call, got a {} call", entry.role, req.agent),
                    })
                }
                None => {
                    return Err(LlmError::ScriptMismatch {
                        index,
                        detail: format!(
                            "prompt digest {digest} does not match the recorded {}",
                            entry.prompt_sha256.as_deref().unwrap_or_default()
                        ),
                    })
                }
            }
        };
        let entry = q.1.remove(pos).expect("position is in range");
        q.0 += 1;
        Ok(entry.response)
    }

    fn supports_parallel(&self) -> bool {
        false
    }
}

/// Passes calls through and appends each exchange, with its prompt digest,
/// to a transcript file that [`ScriptedBackend`] can replay.
pub struct RecordingBackend<B> {
    inner: B,
    sink: Mutex<Option<BufWriter<File>>>,
    entries: Mutex<Vec<TranscriptEntry>>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B, path: Option<&Path>) -> std::io::Result<Self> {
        let sink = match path {
            Some(p) => Some(BufWriter::new(File::create(p)?)),
            None => None,
        };
        Ok(Self {
            inner,
            sink: Mutex::new(sink),
            entries: Mutex::new(Vec::new()),
        })
    }

    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.entries.lock().expect("entries lock").clone()
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let reply = self.inner.complete(req)?;
        let entry = TranscriptEntry {
            role: req.agent,
            prompt_sha256: Some(req.digest()),
            response: reply.clone(),
        };
        // Recording order is the order calls complete, which is the replay
        // order only for sequential runs.
        let mut entries = self.entries.lock().expect("entries lock");
        if let Some(w) = self.sink.lock().expect("sink lock").as_mut() {
            let line = serde_json::to_string(&entry).expect("plain data serializes");
            if let Err(e) = writeln!(w, "{line}").and_then(|_| w.flush()) {
                log::warn!("could not append to the run log: {e}");
            }
        }
        entries.push(entry);
        Ok(reply)
    }

    fn supports_parallel(&self) -> bool {
        self.inner.supports_parallel()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ChatMessage;

    fn req(role: AgentRole, text: &str) -> ChatRequest {
        ChatRequest::new(role, vec![ChatMessage::user(text)])
    }

    #[test]
    fn replay_and_exhaustion() {
        let b = ScriptedBackend::new(vec![TranscriptEntry::new(AgentRole::Coder, "ok")]);
        assert_eq!(b.complete(&req(AgentRole::Coder, "x")).unwrap(), "ok");
        assert_eq!(b.complete(&req(AgentRole::Coder, "x")), Err(LlmError::ScriptExhausted(AgentRole::Coder)));
    }

    #[test]
    fn role_and_digest_mismatch() {
        let b = ScriptedBackend::new(vec![TranscriptEntry::new(AgentRole::Parser, "p")]);
        assert!(matches!(b.complete(&req(AgentRole::Coder, "x")), Err(LlmError::ScriptMismatch { index: 0, .. })));
        let mut e = TranscriptEntry::new(AgentRole::Coder, "c");
        e.prompt_sha256 = Some(req(AgentRole::Coder, "expected").digest());
        let b = ScriptedBackend::new(vec![e.clone(), e]);
        assert_eq!(b.complete(&req(AgentRole::Coder, "expected")).unwrap(), "c");
        assert!(matches!(b.complete(&req(AgentRole::Coder, "drifted")), Err(LlmError::ScriptMismatch { index: 1, .. })));
    }

    #[test]
    fn recording_replays() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run_log.jsonl");
        let inner = ScriptedBackend::new(vec![
            TranscriptEntry::new(AgentRole::Parser, "a"),
            TranscriptEntry::new(AgentRole::Coder, "b"),
        ]);
        let rec = RecordingBackend::new(inner, Some(&path)).unwrap();
        rec.complete(&req(AgentRole::Parser, "1")).unwrap();
        rec.complete(&req(AgentRole::Coder, "2")).unwrap();
        drop(rec);
        let replay = ScriptedBackend::from_file(&path).unwrap();
        assert_eq!(replay.complete(&req(AgentRole::Parser, "1")).unwrap(), "a");
        assert!(replay.complete(&req(AgentRole::Coder, "changed")).is_err());
    }

    #[test]
    fn out_of_order_by_digest() {
        let mut a = TranscriptEntry::new(AgentRole::Coder, "for a");
        a.prompt_sha256 = Some(req(AgentRole::Coder, "a").digest());
        let mut b = TranscriptEntry::new(AgentRole::Coder, "for b");
        b.prompt_sha256 = Some(req(AgentRole::Coder, "b").digest());
        let s = ScriptedBackend::new(vec![a, b]);
        assert_eq!(s.complete(&req(AgentRole::Coder, "b")).unwrap(), "for b");
        assert_eq!(s.complete(&req(AgentRole::Coder, "a")).unwrap(), "for a");
        assert_eq!(s.remaining(), 0);
    }

    #[test]
    fn transcript_text_round_trip() {
        let entries = vec![TranscriptEntry::new(AgentRole::Evaluator, "{\"score\": 3}\nline")];
        assert_eq!(read_transcript(&write_transcript(&entries)).unwrap(), entries);
    }
}
