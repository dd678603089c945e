//! Judge model access: prompt rendering, reference retrieval, chat-completion
//! transport (live or mocked) and assembly of full response annotations.

mod annotate;
mod client;
mod mock;
pub mod prompts;
pub mod retrieval;

use thiserror::Error;

pub use annotate::{
    annotate_response, AnnotateError, Annotator, CallOutcome, ResponseAnnotation, RetryPolicy,
    DEFAULT_CONTEXTS,
    StatementProvenance,
};
pub use client::{HttpJudge, JudgeEndpoint, API_KEY_ENV};
pub use mock::{prompt_hash, MockJudge, RecordingJudge, ScriptedJudge};
pub use prompts::{render_prompt, Slots, Task};
pub use retrieval::{Document, DocumentStore, Passage, StoreError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JudgeError {
    #[error("prompt slot {0:?} is missing or blank")]
    MissingSlot(&'static str),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("judge returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected judge response: {0}")]
    BadResponse(String),
    #[error("mock judge has no reply for prompt {hash}")]
    NoScriptedReply { hash: String },
}

/// Anything that answers a single-turn prompt with text.
pub trait Judge: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, JudgeError>;
}

impl<J: Judge + ?Sized> Judge for &J {
    fn complete(&self, prompt: &str) -> Result<String, JudgeError> {
        (**self).complete(prompt)
    }
}

impl<J: Judge + ?Sized> Judge for Box<J> {
    fn complete(&self, prompt: &str) -> Result<String, JudgeError> {
        (**self).complete(prompt)
    }
}
