use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{last_user_message, validate_messages, ChatBackend, ChatMessage, Completion, LlmError, Usage};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    /// Case-insensitive substring the last user message must contain.
    #[serde(rename = "match", default, skip_serializing_if = "Option::is_none")]
    pub when: Option<String>,
    pub reply: String,
}

impl ScriptEntry {
    pub fn reply(reply: impl Into<String>) -> Self {
        Self {
            when: None,
            reply: reply.into(),
        }
    }

    pub fn when(pattern: impl Into<String>, reply: impl Into<String>) -> Self {
        Self {
            when: Some(pattern.into()),
            reply: reply.into(),
        }
    }

    fn accepts(&self, last_user: Option<&str>) -> bool {
        match (&self.when, last_user) {
            (None, _) => true,
            (Some(pat), Some(msg)) => msg.to_lowercase().contains(&pat.to_lowercase()),
            (Some(_), None) => false,
        }
    }
}

/// Ordered replies. Stored on disk as a JSON array of
/// `{"match": "...", "reply": "..."}` objects.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Script {
    pub entries: Vec<ScriptEntry>,
}

impl Script {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        Self { entries }
    }

    pub fn replies<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(replies.into_iter().map(ScriptEntry::reply).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let err = |reason: String| LlmError::ScriptLoad {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }

    pub fn push(&mut self, entry: ScriptEntry) {
        self.entries.push(entry);
    }
}

/// One session over a [`Script`]: each call returns the earliest unconsumed
/// entry whose predicate accepts the last user message, then consumes it.
#[derive(Debug)]
pub struct ScriptedBackend {
    script: Arc<Script>,
    consumed: Mutex<Vec<bool>>,
}

impl ScriptedBackend {
    pub fn new(script: impl Into<Arc<Script>>) -> Self {
        let script = script.into();
        let consumed = Mutex::new(vec![false; script.entries.len()]);
        Self { script, consumed }
    }

    pub fn remaining(&self) -> usize {
        self.consumed
            .lock()
            .expect("script cursor poisoned")
            .iter()
            .filter(|c| !**c)
            .count()
    }
}

impl ChatBackend for ScriptedBackend {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, LlmError> {
        validate_messages(messages)?;
        let last = last_user_message(messages);
        let mut consumed = self.consumed.lock().expect("script cursor poisoned");
        let pick = self
            .script
            .entries
            .iter()
            .enumerate()
            .find(|(i, e)| !consumed[*i] && e.accepts(last))
            .map(|(i, _)| i);
        match pick {
            Some(i) => {
                consumed[i] = true;
                Ok(Completion {
                    text: self.script.entries[i].reply.clone(),
                    usage: Usage::default(),
                })
            }
            None => Err(LlmError::ScriptExhausted {
                consumed: consumed.iter().filter(|c| **c).count(),
            }),
        }
    }
}
