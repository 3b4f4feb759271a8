use std::thread;

use serde_json::{json, Value};

use super::{validate_messages, BackendConfig, ChatBackend, ChatMessage, Completion, LlmError, Usage};

/// Environment variable holding the provider credential.
pub const API_KEY_ENV: &str = "LLM_API_KEY";

/// OpenAI-compatible `/chat/completions` client.
pub struct RemoteBackend {
    config: BackendConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

enum Attempt {
    Done(Completion),
    Retry(String),
    Fatal(LlmError),
}

impl RemoteBackend {
    pub fn new(config: BackendConfig, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            config,
            api_key: api_key.filter(|k| !k.trim().is_empty()),
            agent,
        }
    }

    pub fn from_env(config: BackendConfig) -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_ENV).ok();
        let backend = Self::new(config, key);
        if backend.api_key.is_none() {
            return Err(LlmError::AuthMissing);
        }
        Ok(backend)
    }

    fn endpoint(&self) -> String {
        format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        )
    }

    fn attempt(&self, key: &str, body: &Value) -> Attempt {
        let response = self
            .agent
            .post(&self.endpoint())
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(body);
        let mut response = match response {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .unwrap_or_default();
        match status {
            200..=299 => match parse_completion(&text) {
                Ok(c) => Attempt::Done(c),
                Err(e) => Attempt::Fatal(e),
            },
            401 | 403 => Attempt::Fatal(LlmError::AuthFailed(status)),
            429 | 500..=599 => Attempt::Retry(format!("HTTP {status}")),
            _ => Attempt::Fatal(LlmError::BackendRejected { status, body: text }),
        }
    }
}

fn parse_completion(text: &str) -> Result<Completion, LlmError> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::MalformedResponse("missing choices[0].message.content".into()))?;
    let tokens = |field: &str| {
        v.pointer(&format!("/usage/{field}"))
            .and_then(Value::as_u64)
            .unwrap_or(0)
    };
    Ok(Completion {
        text: content.to_string(),
        usage: Usage {
            prompt_tokens: tokens("prompt_tokens"),
            completion_tokens: tokens("completion_tokens"),
        },
    })
}

impl ChatBackend for RemoteBackend {
    fn name(&self) -> &str {
        &self.config.model_id
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<Completion, LlmError> {
        validate_messages(messages)?;
        let key = self.api_key.as_deref().ok_or(LlmError::AuthMissing)?;
        let body = json!({
            "model": self.config.model_id,
            "temperature": self.config.temperature,
            "messages": messages,
        });
        let attempts = self.config.max_retries + 1;
        let mut delay = self.config.backoff;
        let mut last_reason = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(key, &body) {
                Attempt::Done(c) => return Ok(c),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(reason) => last_reason = reason,
            }
        }
        Err(LlmError::BackendUnavailable {
            attempts,
            reason: last_reason,
        })
    }
}
