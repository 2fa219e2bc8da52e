use std::thread::sleep;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use ureq::Agent;

use super::{check_request, LlmBackend, LlmError, LlmRequest, LlmResponse, Usage};

pub const DEFAULT_API_KEY_ENV: &str = "ELATE_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub timeout: Duration,
    /// Retries after the first attempt on transport errors, 429 and 5xx.
    pub max_retries: usize,
    /// Delay before the first retry; doubles on each further retry.
    pub retry_base: Duration,
    pub api_key_env: String,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            timeout: Duration::from_secs(120),
            max_retries: 3,
            retry_base: Duration::from_secs(1),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
        }
    }
}

/// Chat-completions client speaking the common hosted JSON shape.
pub struct HttpBackend {
    config: HttpConfig,
    api_key: String,
    agent: Agent,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

enum Attempt {
    Done(LlmResponse),
    Retry(String),
}

impl HttpBackend {
    pub fn new(config: HttpConfig, api_key: impl Into<String>) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            config,
            api_key: api_key.into(),
            agent,
        }
    }

    /// Reads the API key from the configured environment variable.
    pub fn from_env(config: HttpConfig) -> Result<Self, LlmError> {
        let key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| LlmError::MissingCredential(config.api_key_env.clone()))?;
        Ok(Self::new(config, key))
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<Attempt, LlmError> {
        let sent = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", format!("Bearer {}", self.api_key))
            .send_json(body);
        let mut response = match sent {
            Ok(r) => r,
            Err(e) => return Ok(Attempt::Retry(e.to_string())),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Ok(Attempt::Retry(e.to_string())),
        };
        if status == 429 || status >= 500 {
            return Ok(Attempt::Retry(format!("status {status}")));
        }
        if !(200..300).contains(&status) {
            return Err(LlmError::Status { status, body: text });
        }
        let wire: WireResponse =
            serde_json::from_str(&text).map_err(|e| LlmError::Malformed(e.to_string()))?;
        Ok(Attempt::Done(LlmResponse {
            texts: wire
                .choices
                .into_iter()
                .filter_map(|c| c.message.content)
                .collect(),
            usage: wire.usage.map(|u| Usage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            }),
        }))
    }
}

impl LlmBackend for HttpBackend {
    fn draw_samples(&mut self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        check_request(request)?;
        let body = json!({
            "model": request.model,
            "messages": request.messages,
            "n": request.sample_count,
            "temperature": request.temperature,
        });
        let mut delay = self.config.retry_base;
        let mut last = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                sleep(delay);
                delay *= 2;
            }
            match self.attempt(&body)? {
                Attempt::Done(r) => return Ok(r),
                Attempt::Retry(msg) => last = msg,
            }
        }
        Err(LlmError::Unreachable {
            attempts: self.config.max_retries + 1,
            message: last,
        })
    }
}
