//! Fine-grained factuality feedback for RL fine-tuning.
//!
//! A judge model splits a response into sentences and atomic statements,
//! labels each statement's truthfulness against retrieved reference passages,
//! and rates its informativeness. Those labels are priced, anchored back onto
//! the response's characters, and projected onto tokens as a dense reward
//! vector. The same annotations feed factual-precision metrics.
//!
//! Modules follow the data flow:
//! [`annotation`] parses judge replies, [`judge`] drives the judge,
//! [`align`] anchors statements, [`reward`] prices them, [`eval`] scores
//! responses, and [`pipeline`] stages everything through JSONL files.

pub mod align;
pub mod annotation;
pub mod artifact;
pub mod config;
pub mod eval;
pub mod judge;
pub mod pipeline;
pub mod reward;

pub use align::{lcs_locate, resolve_spans, substring_locate, AlignmentResult, CharRange};
pub use annotation::{
    parse_assessment, parse_extraction, parse_verification, InfoScore, SentenceAnnotation,
    StatementAnnotation, VerificationLabel,
};
pub use reward::{
    build_reward_events, info_reward, to_token_rewards, truth_reward, RewardConfig, RewardEvent,
    RewardKind, RewardVector, TokenOffsets,
};
