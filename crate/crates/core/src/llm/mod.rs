//! Chat-completion backends and prompt templates.
//!
//! Everything outside this module talks to models through [`ChatBackend`];
//! only [`remote`] knows the provider wire format.

mod remote;
mod scripted;
mod template;

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use remote::{RemoteBackend, API_KEY_ENV};
pub use scripted::{Script, ScriptEntry, ScriptedBackend};
pub use template::{friction_block, render_dialogue, render_template, TemplateId, Vars};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("backend unavailable after {attempts} attempts: {reason}")]
    BackendUnavailable { attempts: u32, reason: String },
    #[error("backend rejected request ({status}): {body}")]
    BackendRejected { status: u16, body: String },
    #[error("authentication failed ({0})")]
    AuthFailed(u16),
    #[error("no credential: set {API_KEY_ENV}")]
    AuthMissing,
    #[error("script exhausted after {consumed} replies")]
    ScriptExhausted { consumed: usize },
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("invalid messages: {0}")]
    InvalidMessages(String),
    #[error("unbound placeholder {{{{{0}}}}}")]
    UnboundPlaceholder(String),
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("failed to load script {path}: {reason}")]
    ScriptLoad { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::new(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new(Role::Assistant, content)
    }

    pub fn tool(content: impl Into<String>) -> Self {
        Self::new(Role::Tool, content)
    }
}

/// Checks the message-list contract shared by all backends.
pub fn validate_messages(messages: &[ChatMessage]) -> Result<(), LlmError> {
    if messages.is_empty() {
        return Err(LlmError::InvalidMessages("no messages".into()));
    }
    for (i, m) in messages.iter().enumerate() {
        if matches!(m.role, Role::System | Role::User) && m.content.trim().is_empty() {
            return Err(LlmError::InvalidMessages(format!(
                "message {i} ({:?}) is empty",
                m.role
            )));
        }
        if m.role == Role::System && i != 0 {
            return Err(LlmError::InvalidMessages(format!(
                "system message at position {i}"
            )));
        }
    }
    Ok(())
}

/// Content of the most recent user message, if any.
pub fn last_user_message(messages: &[ChatMessage]) -> Option<&str> {
    messages
        .iter()
        .rev()
        .find(|m| m.role == Role::User)
        .map(|m| m.content.as_str())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub usage: Usage,
}

/// A chat-completion session.
///
/// Scripted implementations keep a per-instance cursor, so one instance is
/// one session; the remote implementation carries no state between calls.
pub trait ChatBackend: Send + Sync {
    fn name(&self) -> &str;

    fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, LlmError>;
}

impl<T: ChatBackend + ?Sized> ChatBackend for Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, LlmError> {
        (**self).complete(messages)
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, LlmError> {
        (**self).complete(messages)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackendKind {
    Remote,
    Scripted(Arc<Script>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub model_id: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout: Duration,
    pub base_url: String,
    /// First retry delay; doubles on each further attempt.
    pub backoff: Duration,
}

pub const DEFAULT_MODEL: &str = "gpt-4o-mini";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Remote,
            model_id: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            max_retries: 3,
            timeout: Duration::from_secs(60),
            base_url: DEFAULT_BASE_URL.to_string(),
            backoff: Duration::from_millis(500),
        }
    }
}

impl BackendConfig {
    pub fn scripted(script: Script) -> Self {
        Self {
            kind: BackendKind::Scripted(Arc::new(script)),
            ..Self::default()
        }
    }

    /// Parses `remote` or `scripted:<path>`.
    pub fn from_spec(spec: &str) -> Result<Self, LlmError> {
        match spec.split_once(':') {
            None if spec == "remote" => Ok(Self::default()),
            Some(("scripted", path)) => Ok(Self::scripted(Script::load(PathBuf::from(path))?)),
            _ => Err(LlmError::InvalidMessages(format!(
                "backend must be `remote` or `scripted:<path>`, got {spec:?}"
            ))),
        }
    }

    /// Opens a new session. Remote sessions read the credential from
    /// [`API_KEY_ENV`].
    pub fn connect(&self) -> Result<Box<dyn ChatBackend>, LlmError> {
        if self.temperature < 0.0 || !self.temperature.is_finite() {
            return Err(LlmError::InvalidMessages(format!(
                "temperature {} must be >= 0",
                self.temperature
            )));
        }
        match &self.kind {
            BackendKind::Remote => Ok(Box::new(RemoteBackend::from_env(self.clone())?)),
            BackendKind::Scripted(script) => Ok(Box::new(ScriptedBackend::new(script.clone()))),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendKind::Remote => f.write_str("remote"),
            BackendKind::Scripted(_) => f.write_str("scripted"),
        }
    }
}
