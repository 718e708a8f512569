//! Parser, Coder and Evaluator roles and the loops that drive them.
//!
//! A [`Session`] owns the backend, the sampling configuration and the
//! warnings collected during a run. Each stage is a method:
//! [`Session::parse_shape`], [`Session::generate_bboxes`],
//! [`Session::bootstrap`], [`Session::model_shape`] and
//! [`Session::edit_shape`].

mod bbox;
mod edit;
mod model;
mod parse;
pub mod prompts;

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde_json::Value;

use crate::executor::ExecOptions;
use crate::llm::{extract_code_block, AgentRole, ChatBackend, ChatMessage, ChatRequest, LlmError};
use crate::program::Diagnostic;
use crate::render::RenderError;

pub use edit::EditOutcome;
pub use model::{ModelOutcome, PathTrace};
pub use parse::read_graph_reply;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    /// Paths per node.
    pub m: usize,
    /// Iterations per path.
    pub t: usize,
    /// Early-stopping threshold.
    pub s_tau: u8,
    /// Bootstrapping rounds.
    pub n_bootstrap: usize,
    /// Iterations of the bounding-box refine loop (one path).
    pub bbox_iterations: usize,
    pub parse_attempts: usize,
    /// Extra asks after an evaluator reply that cannot be read.
    pub eval_reasks: usize,
    pub image_size: u32,
    pub exec: ExecOptions,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            m: 3,
            t: 3,
            s_tau: 9,
            n_bootstrap: 2,
            bbox_iterations: 3,
            parse_attempts: 3,
            eval_reasks: 3,
            image_size: crate::render::DEFAULT_SIZE,
            exec: ExecOptions::default(),
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.m == 0 || self.t == 0 || self.bbox_iterations == 0 || self.parse_attempts == 0 {
            return Err("M, T, the bbox iterations and the parse attempts must be at least 1".into());
        }
        if self.s_tau > 10 {
            return Err(format!("s_tau must be within [0, 10], got {}", self.s_tau));
        }
        if self.image_size < 16 {
            return Err(format!("image size {} is too small", self.image_size));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error("the shape description is empty")]
    EmptyPrompt,
    #[error("nothing to evaluate: no images")]
    NoImages,
    #[error("could not read a part graph after {attempts} attempts:\n{}", crate::program::render_diagnostics(.diagnostics))]
    UnparseableGraph { attempts: usize, diagnostics: Vec<Diagnostic> },
    #[error("could not read the evaluation: {0}")]
    UnparseableEvaluation(String),
    #[error("node '{0}' has no bounding volume")]
    MissingBounds(String),
    #[error("no node has a program to edit")]
    NoCode,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Backend(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct EvalReport {
    pub score: u8,
    pub feedback: String,
}

pub struct Session<'a> {
    backend: &'a dyn ChatBackend,
    pub cfg: AgentConfig,
    artifacts: Option<PathBuf>,
    warnings: Mutex<Vec<String>>,
}

impl<'a> Session<'a> {
    pub fn new(backend: &'a dyn ChatBackend, cfg: AgentConfig) -> Result<Self, AgentError> {
        cfg.validate().map_err(AgentError::Config)?;
        Ok(Self {
            backend,
            cfg,
            artifacts: None,
            warnings: Mutex::new(Vec::new()),
        })
    }

    /// Per-iteration programs, renders and evaluations go under `dir`.
    pub fn with_artifacts(mut self, dir: &Path) -> Self {
        self.artifacts = Some(dir.to_path_buf());
        self
    }

    pub fn warnings(&self) -> Vec<String> {
        self.warnings.lock().expect("warnings lock").clone()
    }

    pub fn take_warnings(&self) -> Vec<String> {
        std::mem::take(&mut *self.warnings.lock().expect("warnings lock"))
    }

    pub(crate) fn warn(&self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.warnings.lock().expect("warnings lock").push(msg);
    }

    fn parallel(&self) -> bool {
        self.backend.supports_parallel()
    }

    fn call(&self, role: AgentRole, messages: &[ChatMessage]) -> Result<String, AgentError> {
        let req = ChatRequest::new(role, messages.to_vec());
        log::debug!("{role} call: {} messages, {} images", messages.len(), req.image_count());
        Ok(self.backend.complete(&req)?)
    }

    /// Asks the Evaluator for a JSON score and feedback, re-asking when the
    /// reply cannot be read.
    pub fn evaluate(&self, images: Vec<Vec<u8>>, context: &str) -> Result<EvalReport, AgentError> {
        if images.is_empty() {
            return Err(AgentError::NoImages);
        }
        let mut messages = vec![
            ChatMessage::system(prompts::EVALUATOR_SYSTEM),
            ChatMessage::user(context).with_images(images),
        ];
        let mut problem = String::new();
        for attempt in 0..=self.cfg.eval_reasks {
            if attempt > 0 {
                messages.push(ChatMessage::user(prompts::fill(prompts::EVAL_RETRY, &[("problem", &problem)])));
            }
            let reply = self.call(AgentRole::Evaluator, &messages)?;
            match parse_eval_reply(&reply) {
                Ok((report, notes)) => {
                    for n in notes {
                        self.warn(format!("evaluator reply: {n}"));
                    }
                    return Ok(report);
                }
                Err(p) => {
                    problem = p;
                    messages.push(ChatMessage::assistant(reply));
                }
            }
        }
        Err(AgentError::UnparseableEvaluation(problem))
    }

    fn write_artifact(&self, rel: &str, bytes: &[u8]) {
        let Some(root) = &self.artifacts else { return };
        let path = root.join(rel);
        let res = path
            .parent()
            .map_or(Ok(()), std::fs::create_dir_all)
            .and_then(|_| std::fs::write(&path, bytes));
        if let Err(e) = res {
            self.warn(format!("could not write {}: {e}", path.display()));
        }
    }

    fn has_artifacts(&self) -> bool {
        self.artifacts.is_some()
    }
}

/// Reads `{"score": .., "feedback": ..}` from an evaluator reply. The object
/// may be the whole reply, a fenced block or embedded in prose. Returns the
/// report and notes about any coercion applied.
pub fn parse_eval_reply(reply: &str) -> Result<(EvalReport, Vec<String>), String> {
    let trimmed = reply.trim();
    let mut candidates = vec![trimmed.to_string()];
    let (block, _) = extract_code_block(reply, Some("json"));
    candidates.push(block);
    if let (Some(a), Some(b)) = (trimmed.find('{'), trimmed.rfind('}')) {
        if a < b {
            candidates.push(trimmed[a..=b].to_string());
        }
    }
    let Some(obj) = candidates
        .iter()
        .filter_map(|c| serde_json::from_str::<Value>(c.trim()).ok())
        .find(Value::is_object)
    else {
        return Err("no JSON object found".into());
    };
    let mut notes = Vec::new();
    let raw = match obj.get("score") {
        Some(Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
        Some(Value::String(s)) => s.trim().parse::<f64>().map_err(|_| format!("score {s:?} is not a number"))?,
        Some(other) => return Err(format!("score {other} is not a number")),
        None => return Err("the object has no \"score\"".into()),
    };
    if !raw.is_finite() {
        return Err("score is not a finite number".into());
    }
    let mut score = raw;
    if score.fract() != 0.0 {
        score = score.round();
        notes.push(format!("score {raw} rounded to {score}"));
    }
    if !(0.0..=10.0).contains(&score) {
        let c = score.clamp(0.0, 10.0);
        notes.push(format!("score {score} clamped to {c}"));
        score = c;
    }
    let feedback = match obj.get("feedback") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => {
            notes.push("no feedback given".into());
            String::new()
        }
        Some(other) => other.to_string(),
    };
    Ok((
        EvalReport {
            score: score as u8,
            feedback,
        },
        notes,
    ))
}

/// Program text from a Coder reply.
fn extract_program(session: &Session, reply: &str, what: &str) -> String {
    let (code, warning) = extract_code_block(reply, Some("dsl"));
    if let Some(w) = warning {
        session.warn(format!("{what}: {w}"));
    }
    code
}
