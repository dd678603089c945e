use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::{Judge, JudgeError};

/// Hex SHA-256 of the exact prompt bytes; the key used by mock fixtures.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Replays scripted replies keyed by [`prompt_hash`].
///
/// The fixture file is a JSON object mapping prompt hash to reply text.
/// A prompt without an entry fails like an unreachable endpoint would.
#[derive(Debug, Clone, Default)]
pub struct MockJudge {
    replies: BTreeMap<String, String>,
}

impl MockJudge {
    pub fn new(replies: BTreeMap<String, String>) -> Self {
        MockJudge { replies }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let replies = serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        Ok(MockJudge { replies })
    }

    pub fn insert(&mut self, prompt: &str, reply: impl Into<String>) {
        self.replies.insert(prompt_hash(prompt), reply.into());
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.replies).expect("string map serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}

impl Judge for MockJudge {
    fn complete(&self, prompt: &str) -> Result<String, JudgeError> {
        let hash = prompt_hash(prompt);
        self.replies
            .get(&hash)
            .cloned()
            .ok_or(JudgeError::NoScriptedReply { hash })
    }
}

/// Judge backed by a closure; handy for fault injection.
pub struct ScriptedJudge<F>(pub F);

impl<F> Judge for ScriptedJudge<F>
where
    F: Fn(&str) -> Result<String, JudgeError> + Send + Sync,
{
    fn complete(&self, prompt: &str) -> Result<String, JudgeError> {
        (self.0)(prompt)
    }
}

/// Wraps another judge and keeps every successful exchange, so a live or
/// scripted session can be frozen into a [`MockJudge`] fixture.
pub struct RecordingJudge<J> {
    inner: J,
    seen: Mutex<MockJudge>,
}

impl<J: Judge> RecordingJudge<J> {
    pub fn new(inner: J) -> Self {
        RecordingJudge {
            inner,
            seen: Mutex::new(MockJudge::default()),
        }
    }

    pub fn into_mock(self) -> MockJudge {
        self.seen.into_inner().unwrap_or_else(|e| e.into_inner())
    }
}

impl<J: Judge> Judge for RecordingJudge<J> {
    fn complete(&self, prompt: &str) -> Result<String, JudgeError> {
        let reply = self.inner.complete(prompt)?;
        self.seen
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(prompt, reply.clone());
        Ok(reply)
    }
}
