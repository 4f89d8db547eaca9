use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use super::{ChatBackend, LlmError, ModelConfig};

/// Pattern and the replies it cycles through, indexed by attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    pub pattern: String,
    pub replies: Vec<String>,
}

impl MockRule {
    pub fn new<S: Into<String>>(pattern: impl Into<String>, replies: impl IntoIterator<Item = S>) -> Self {
        MockRule { pattern: pattern.into(), replies: replies.into_iter().map(Into::into).collect() }
    }

    /// Rule matching prompts that contain `needle` literally.
    pub fn containing<S: Into<String>>(needle: &str, replies: impl IntoIterator<Item = S>) -> Self {
        MockRule::new(regex::escape(needle), replies)
    }
}

/// Scripted offline backend. The first rule whose pattern matches the prompt
/// answers it.
#[derive(Debug, Clone)]
pub struct MockAdapter {
    rules: Vec<(Regex, Vec<String>)>,
}

impl MockAdapter {
    pub fn new(rules: Vec<MockRule>) -> Result<Self, LlmError> {
        let rules = rules
            .into_iter()
            .map(|r| {
                if r.replies.is_empty() {
                    return Err(LlmError::InvalidConfig(format!("mock rule `{}` has no replies", r.pattern)));
                }
                let re = RegexBuilder::new(&r.pattern)
                    .dot_matches_new_line(true)
                    .size_limit(1 << 26)
                    .build()
                    .map_err(|e| LlmError::InvalidConfig(e.to_string()))?;
                Ok((re, r.replies))
            })
            .collect::<Result<_, _>>()?;
        Ok(MockAdapter { rules })
    }

    /// Answers every prompt with `reply`.
    pub fn fixed(reply: &str) -> Self {
        MockAdapter::new(vec![MockRule::new(".*", [reply])]).expect("static pattern")
    }

    /// Script stored as a JSON array of `{pattern, replies}`.
    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let rules: Vec<MockRule> = serde_json::from_str(&text).map_err(|e| LlmError::InvalidConfig(e.to_string()))?;
        MockAdapter::new(rules)
    }
}

impl ChatBackend for MockAdapter {
    fn chat(&self, prompt: &str, attempt: usize, _: &ModelConfig) -> Result<String, LlmError> {
        let (_, replies) = self.rules.iter().find(|(re, _)| re.is_match(prompt)).ok_or(LlmError::UnmatchedPrompt)?;
        Ok(replies[(attempt.max(1) - 1) % replies.len()].clone())
    }
}
