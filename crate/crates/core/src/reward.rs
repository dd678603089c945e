//! Statement-level labels to character-anchored rewards, and their
//! projection onto a token sequence.
//!
//! Each located statement earns a truthfulness reward
//! `alpha * f(label) * |g(info)|` at its last character. Each located
//! sentence earns an informativeness reward
//! `beta * ln(mu + max(epsilon, sum g(info_i)))` at its last character, where
//! the sum runs over all of the sentence's statements, anchored or not.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::CharRange;
use crate::annotation::{InfoScore, SentenceAnnotation, VerificationLabel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("sentences {sentences:?} have no span in the response; their rewards were skipped")]
    MissingSentenceSpan {
        sentences: Vec<usize>,
        /// Events for the sentences that could be anchored.
        events: Vec<RewardEvent>,
    },
    #[error("statement {statement} of sentence {sentence} is missing its {missing}")]
    Unlabeled {
        sentence: usize,
        statement: usize,
        missing: &'static str,
    },
    #[error("reward event at character {offset} is not covered by any token")]
    UncoveredOffset { offset: usize },
    #[error("invalid token offsets: {0}")]
    InvalidOffsets(String),
    #[error("invalid reward config: {0}")]
    InvalidConfig(String),
}

/// Scalar value per verification label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationMap {
    pub correct: f64,
    pub hedged_correct: f64,
    pub vague: f64,
    pub hedged_wrong: f64,
    pub wrong: f64,
}

impl VerificationMap {
    pub fn get(&self, label: VerificationLabel) -> f64 {
        match label {
            VerificationLabel::Correct => self.correct,
            VerificationLabel::HedgedCorrect => self.hedged_correct,
            VerificationLabel::Vague => self.vague,
            VerificationLabel::HedgedWrong => self.hedged_wrong,
            VerificationLabel::Wrong => self.wrong,
        }
    }
}

/// Scalar value per informativeness score, 1 through 5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfoMap {
    #[serde(rename = "1")]
    pub one: f64,
    #[serde(rename = "2")]
    pub two: f64,
    #[serde(rename = "3")]
    pub three: f64,
    #[serde(rename = "4")]
    pub four: f64,
    #[serde(rename = "5")]
    pub five: f64,
}

impl InfoMap {
    pub fn get(&self, score: InfoScore) -> f64 {
        match score.value() {
            1 => self.one,
            2 => self.two,
            3 => self.three,
            4 => self.four,
            5 => self.five,
            _ => unreachable!("InfoScore is always within 1..=5"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    /// Name written into reward artifacts.
    pub name: String,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub mu: f64,
    #[serde(rename = "f")]
    pub f_map: VerificationMap,
    #[serde(rename = "g")]
    pub g_map: InfoMap,
}

impl RewardConfig {
    /// Settings tuned for Qwen-2.5-7B-Instruct.
    pub fn qwen() -> Self {
        RewardConfig {
            name: "qwen".to_string(),
            alpha: 1.0,
            beta: 1.2,
            epsilon: -0.9,
            mu: 1.0,
            f_map: VerificationMap {
                correct: 0.45,
                hedged_correct: 0.35,
                vague: -1.0,
                hedged_wrong: -1.5,
                wrong: -1.7,
            },
            g_map: InfoMap {
                one: -0.2,
                two: 0.1,
                three: 0.75,
                four: 1.0,
                five: 1.25,
            },
        }
    }

    /// Settings tuned for Llama-3.1-8B-Instruct.
    pub fn llama() -> Self {
        RewardConfig {
            name: "llama".to_string(),
            alpha: 1.0,
            beta: 1.2,
            epsilon: -0.9,
            mu: 1.0,
            f_map: VerificationMap {
                correct: 0.2,
                hedged_correct: 0.1,
                vague: -1.8,
                hedged_wrong: -2.0,
                wrong: -2.2,
            },
            g_map: InfoMap {
                one: -0.1,
                two: 0.6,
                three: 0.8,
                four: 1.0,
                five: 1.2,
            },
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "qwen" => Some(Self::qwen()),
            "llama" => Some(Self::llama()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        let floor = self.mu + self.epsilon;
        if floor.is_nan() || floor <= 0.0 {
            return Err(RewardError::InvalidConfig(format!(
                "mu + epsilon must be positive, got {floor}"
            )));
        }
        let f = self.f_map;
        let g = self.g_map;
        let all = [
            self.alpha, self.beta, self.epsilon, self.mu, f.correct, f.hedged_correct, f.vague,
            f.hedged_wrong, f.wrong, g.one, g.two, g.three, g.four, g.five,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(RewardError::InvalidConfig("non-finite parameter".to_string()));
        }
        Ok(())
    }

    /// Smallest value `info_reward` can take.
    pub fn info_floor(&self) -> f64 {
        self.beta * (self.mu + self.epsilon).ln()
    }
}

pub fn truth_reward(label: VerificationLabel, info: InfoScore, cfg: &RewardConfig) -> f64 {
    cfg.alpha * cfg.f_map.get(label) * cfg.g_map.get(info).abs()
}

/// Informativeness reward for one sentence given its statements' scores.
pub fn info_reward(scores: &[InfoScore], cfg: &RewardConfig) -> f64 {
    let total: f64 = scores.iter().map(|s| cfg.g_map.get(*s)).sum();
    info_reward_from_sum(total, cfg)
}

/// Same as [`info_reward`] but on a precomputed `sum g(info_i)`.
pub fn info_reward_from_sum(g_sum: f64, cfg: &RewardConfig) -> f64 {
    cfg.beta * (cfg.mu + cfg.epsilon.max(g_sum)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RewardKind {
    Truth,
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardEvent {
    pub offset: usize,
    pub value: f64,
    pub kind: RewardKind,
}

/// Builds reward events for a span-resolved annotation.
///
/// Events come out in sentence order, each sentence's truth events first and
/// its info event last. Statements without a span only contribute to the
/// sentence's informativeness sum. When some sentences have no span the
/// remaining events are returned inside [`RewardError::MissingSentenceSpan`].
pub fn build_reward_events(
    response: &str,
    resolved: &[SentenceAnnotation],
    cfg: &RewardConfig,
) -> Result<Vec<RewardEvent>, RewardError> {
    let len = response.chars().count();
    let mut events = Vec::new();
    let mut missing = Vec::new();

    for sentence in resolved {
        let Some(span) = sentence.span.filter(|s| s.end <= len) else {
            missing.push(sentence.index);
            continue;
        };
        let mut g_sum = 0.0;
        for (position, statement) in sentence.statements.iter().enumerate() {
            let unlabeled = |missing: &'static str| RewardError::Unlabeled {
                sentence: sentence.index,
                statement: position + 1,
                missing,
            };
            let label = statement.verification.ok_or_else(|| unlabeled("verification label"))?;
            let info = statement.info.ok_or_else(|| unlabeled("informativeness score"))?;
            g_sum += cfg.g_map.get(info);
            if let Some(stmt_span) = statement.span.filter(|s| s.end <= len) {
                events.push(RewardEvent {
                    offset: stmt_span.last(),
                    value: truth_reward(label, info, cfg),
                    kind: RewardKind::Truth,
                });
            }
        }
        if !sentence.statements.is_empty() {
            events.push(RewardEvent {
                offset: span.last(),
                value: info_reward_from_sum(g_sum, cfg),
                kind: RewardKind::Info,
            });
        }
    }

    if missing.is_empty() {
        Ok(events)
    } else {
        Err(RewardError::MissingSentenceSpan {
            sentences: missing,
            events,
        })
    }
}

/// Per-token character ranges produced by a tokenizer, sorted and disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenOffsets(Vec<CharRange>);

impl TokenOffsets {
    pub fn new(ranges: Vec<CharRange>) -> Result<Self, RewardError> {
        for pair in ranges.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(RewardError::InvalidOffsets(format!(
                    "token [{}, {}) overlaps or precedes [{}, {})",
                    pair[1].start, pair[1].end, pair[0].start, pair[0].end
                )));
            }
        }
        Ok(TokenOffsets(ranges))
    }

    /// Offsets from `(start, end)` pairs; empty or inverted ranges are rejected.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self, RewardError> {
        let ranges = pairs
            .iter()
            .map(|&(s, e)| {
                CharRange::new(s, e)
                    .ok_or_else(|| RewardError::InvalidOffsets(format!("empty token range [{s}, {e})")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(ranges)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ranges(&self) -> &[CharRange] {
        &self.0
    }

    /// Index of the token covering `offset`.
    pub fn token_at(&self, offset: usize) -> Option<usize> {
        let idx = self.0.partition_point(|r| r.end <= offset);
        self.0.get(idx).filter(|r| r.contains(offset)).map(|_| idx)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RewardVector(pub Vec<f64>);

impl RewardVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Deposits each event's value on the token covering its offset.
pub fn to_token_rewards(
    events: &[RewardEvent],
    offsets: &TokenOffsets,
) -> Result<RewardVector, RewardError> {
    let mut values = vec![0.0; offsets.len()];
    for event in events {
        let token = offsets
            .token_at(event.offset)
            .ok_or(RewardError::UncoveredOffset { offset: event.offset })?;
        values[token] += event.value;
    }
    Ok(RewardVector(values))
}
