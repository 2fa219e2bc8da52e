use std::collections::VecDeque;
use std::path::Path;

use super::{check_request, LlmBackend, LlmError, LlmRequest, LlmResponse};

/// Replays canned responses in order; once exhausted it returns no texts.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    queue: VecDeque<String>,
    /// Every request received, in order.
    pub requests: Vec<LlmRequest>,
}

impl MockBackend {
    pub fn new(responses: Vec<String>) -> Self {
        Self {
            queue: responses.into(),
            requests: Vec::new(),
        }
    }

    /// Splits a script on lines consisting only of `---`. Blank entries are skipped.
    pub fn from_script(text: &str) -> Self {
        let mut responses = Vec::new();
        let mut current = String::new();
        for line in text.lines() {
            if line.trim() == "---" {
                responses.push(std::mem::take(&mut current));
            } else {
                current.push_str(line);
                current.push('\n');
            }
        }
        responses.push(current);
        Self::new(
            responses
                .into_iter()
                .map(|r| r.trim().to_string())
                .filter(|r| !r.is_empty())
                .collect(),
        )
    }

    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        Ok(Self::from_script(&std::fs::read_to_string(path)?))
    }

    pub fn remaining(&self) -> usize {
        self.queue.len()
    }
}

impl LlmBackend for MockBackend {
    fn draw_samples(&mut self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        check_request(request)?;
        self.requests.push(request.clone());
        let take = request.sample_count.min(self.queue.len());
        Ok(LlmResponse {
            texts: self.queue.drain(..take).collect(),
            usage: None,
        })
    }
}
