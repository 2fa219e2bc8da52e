//! Proposal backends: an HTTP chat-completions client and a scripted mock.

mod http;
mod mock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpBackend, HttpConfig, DEFAULT_API_KEY_ENV};
pub use mock::MockBackend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmRequest {
    pub messages: Vec<Message>,
    pub sample_count: usize,
    pub temperature: f64,
    pub model: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl Usage {
    pub fn add(&mut self, other: &Usage) {
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LlmResponse {
    pub texts: Vec<String>,
    pub usage: Option<Usage>,
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("API key not found in environment variable {0}")]
    MissingCredential(String),
    #[error("request failed after {attempts} attempt(s): {message}")]
    Unreachable { attempts: usize, message: String },
    #[error("server answered {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("invalid request: {0}")]
    InvalidRequest(&'static str),
    #[error("cannot read mock script: {0}")]
    Script(#[from] std::io::Error),
}

/// Something that can answer a chat request with one or more samples.
pub trait LlmBackend {
    fn draw_samples(&mut self, request: &LlmRequest) -> Result<LlmResponse, LlmError>;
}

impl<B: LlmBackend + ?Sized> LlmBackend for Box<B> {
    fn draw_samples(&mut self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        (**self).draw_samples(request)
    }
}

pub(crate) fn check_request(request: &LlmRequest) -> Result<(), LlmError> {
    if request.sample_count == 0 {
        return Err(LlmError::InvalidRequest("sample_count must be at least 1"));
    }
    if !request.messages.iter().any(|m| m.role == Role::User) {
        return Err(LlmError::InvalidRequest("no user message"));
    }
    Ok(())
}

/// Default number of (prompt, reply) exchanges kept in the conversation.
pub const DEFAULT_HISTORY_TURNS: usize = 3;

/// A conversation with bounded memory: each call sends the earlier
/// exchanges of the current generation before the new prompt.
#[derive(Debug, Clone)]
pub struct ChatSession {
    pub system: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub max_turns: usize,
    history: Vec<(String, String)>,
}

impl ChatSession {
    pub fn new(model: impl Into<String>, temperature: f64) -> Self {
        Self {
            system: None,
            model: model.into(),
            temperature,
            max_turns: DEFAULT_HISTORY_TURNS,
            history: Vec::new(),
        }
    }

    pub fn with_system(mut self, system: impl Into<String>) -> Self {
        self.system = Some(system.into());
        self
    }

    pub fn clear_history(&mut self) {
        self.history.clear();
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn request(&self, prompt: &str, sample_count: usize) -> LlmRequest {
        let mut messages = Vec::with_capacity(2 * self.history.len() + 2);
        if let Some(s) = &self.system {
            messages.push(Message::new(Role::System, s.clone()));
        }
        for (user, reply) in &self.history {
            messages.push(Message::new(Role::User, user.clone()));
            messages.push(Message::new(Role::Assistant, reply.clone()));
        }
        messages.push(Message::new(Role::User, prompt));
        LlmRequest {
            messages,
            sample_count,
            temperature: self.temperature,
            model: self.model.clone(),
        }
    }

    /// Sends `prompt` and records the exchange (first reply) in the history.
    pub fn draw(
        &mut self,
        backend: &mut dyn LlmBackend,
        prompt: &str,
        sample_count: usize,
    ) -> Result<LlmResponse, LlmError> {
        let response = backend.draw_samples(&self.request(prompt, sample_count))?;
        if let Some(first) = response.texts.first() {
            self.history.push((prompt.to_string(), first.clone()));
            if self.history.len() > self.max_turns {
                let excess = self.history.len() - self.max_turns;
                self.history.drain(..excess);
            }
        }
        Ok(response)
    }
}

/// The body of the first ``` fenced block (language tag dropped), or the
/// whole text trimmed when there is no fence.
pub fn extract_code(raw: &str) -> String {
    let Some(open) = raw.find("```") else {
        return raw.trim().to_string();
    };
    let after = &raw[open + 3..];
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    let body = match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    };
    body.trim().to_string()
}
