//! Parsing of judge replies for the three annotation tasks: statement
//! extraction, statement verification and informativeness assessment.
//!
//! The extraction wire format is line oriented:
//!
//! ```text
//! >> Sentence 1: Arthur's Magazine was likely started first.
//! * Arthur's Magazine was likely started first.
//! ```
//!
//! A reply consisting of `No statements` means the response carries no
//! checkable facts.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::CharRange;

/// Sentinel reply for a response without factual content.
pub const NO_STATEMENTS: &str = "No statements";

const SENTENCE_PREFIX: &str = ">> Sentence";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("malformed annotation at line {line}: {reason}")]
    MalformedAnnotation { line: usize, reason: String },
    #[error("unknown verification label {0:?}")]
    UnknownLabel(String),
    #[error("informativeness score {0} is outside 1..=5")]
    OutOfRangeScore(i64),
    #[error("malformed informativeness score {0:?}")]
    MalformedScore(String),
}

/// Truthfulness verdict for one atomic statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerificationLabel {
    Correct,
    HedgedCorrect,
    Vague,
    HedgedWrong,
    Wrong,
}

impl VerificationLabel {
    pub const ALL: [VerificationLabel; 5] = [
        VerificationLabel::Correct,
        VerificationLabel::HedgedCorrect,
        VerificationLabel::Vague,
        VerificationLabel::HedgedWrong,
        VerificationLabel::Wrong,
    ];

    /// Display spelling, as a judge would write it.
    pub fn as_str(self) -> &'static str {
        match self {
            VerificationLabel::Correct => "Correct",
            VerificationLabel::HedgedCorrect => "Hedged Correct",
            VerificationLabel::Vague => "Vague",
            VerificationLabel::HedgedWrong => "Hedged Wrong",
            VerificationLabel::Wrong => "Wrong",
        }
    }

    /// Whether the statement counts as supported when scoring factuality.
    pub fn is_supported(self) -> bool {
        matches!(
            self,
            VerificationLabel::Correct | VerificationLabel::HedgedCorrect
        )
    }
}

impl fmt::Display for VerificationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VerificationLabel {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_verification(s)
    }
}

/// Informativeness on the 1 (useless) to 5 (answers the question) scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct InfoScore(u8);

impl InfoScore {
    pub const MIN: InfoScore = InfoScore(1);
    pub const MAX: InfoScore = InfoScore(5);

    pub fn new(value: i64) -> Result<Self, ParseError> {
        if (1..=5).contains(&value) {
            Ok(InfoScore(value as u8))
        } else {
            Err(ParseError::OutOfRangeScore(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = InfoScore> {
        (1..=5).map(InfoScore)
    }
}

impl TryFrom<i64> for InfoScore {
    type Error = ParseError;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        InfoScore::new(value)
    }
}

impl From<InfoScore> for u8 {
    fn from(score: InfoScore) -> u8 {
        score.0
    }
}

impl fmt::Display for InfoScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementAnnotation {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info: Option<InfoScore>,
    /// Absolute character range in the response, once resolved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<CharRange>,
    /// Set by span resolution when the statement could not be anchored.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unresolved: bool,
}

impl StatementAnnotation {
    pub fn new(text: impl Into<String>) -> Self {
        StatementAnnotation {
            text: text.into(),
            verification: None,
            info: None,
            span: None,
            unresolved: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceAnnotation {
    /// 1-based ordinal as emitted by the judge.
    pub index: usize,
    pub text: String,
    pub statements: Vec<StatementAnnotation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<CharRange>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unresolved: bool,
}

impl SentenceAnnotation {
    pub fn new(index: usize, text: impl Into<String>) -> Self {
        SentenceAnnotation {
            index,
            text: text.into(),
            statements: Vec::new(),
            span: None,
            unresolved: false,
        }
    }

    pub fn with_statements<I, S>(mut self, statements: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.statements
            .extend(statements.into_iter().map(StatementAnnotation::new));
        self
    }
}

fn sentence_header() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^>> Sentence ([0-9]+): (.*)$").unwrap())
}

fn statement_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\* (.*)$").unwrap())
}

/// Parses the judge's reply to the extraction prompt.
///
/// Sentences without statements are dropped, as are blank statement lines.
/// Lines matching neither the header nor the statement grammar (echoed
/// section titles, blank lines, the `No statements` sentinel) are ignored.
pub fn parse_extraction(raw: &str) -> Result<Vec<SentenceAnnotation>, ParseError> {
    let mut sentences: Vec<SentenceAnnotation> = Vec::new();
    let mut current: Option<SentenceAnnotation> = None;
    let mut last_index = 0usize;

    for (lineno, line) in raw.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let lineno = lineno + 1;

        if let Some(caps) = sentence_header().captures(line) {
            let index: usize = caps[1].parse().map_err(|_| ParseError::MalformedAnnotation {
                line: lineno,
                reason: format!("sentence ordinal {:?} does not fit", &caps[1]),
            })?;
            if index <= last_index {
                return Err(ParseError::MalformedAnnotation {
                    line: lineno,
                    reason: format!("sentence ordinal {index} does not follow {last_index}"),
                });
            }
            last_index = index;
            if let Some(done) = current.take() {
                sentences.push(done);
            }
            current = Some(SentenceAnnotation::new(index, caps[2].trim()));
        } else if line.starts_with(SENTENCE_PREFIX) {
            return Err(ParseError::MalformedAnnotation {
                line: lineno,
                reason: format!("bad sentence header {line:?}"),
            });
        } else if let Some(caps) = statement_line().captures(line) {
            let Some(sentence) = current.as_mut() else {
                return Err(ParseError::MalformedAnnotation {
                    line: lineno,
                    reason: "statement before any sentence header".to_string(),
                });
            };
            let text = caps[1].trim();
            if !text.is_empty() {
                sentence.statements.push(StatementAnnotation::new(text));
            }
        }
    }
    if let Some(done) = current.take() {
        sentences.push(done);
    }

    sentences.retain(|s| !s.statements.is_empty());
    Ok(sentences)
}

/// Renders sentences back into the extraction wire format.
pub fn render_extraction(sentences: &[SentenceAnnotation]) -> String {
    if sentences.is_empty() {
        return format!("{NO_STATEMENTS}\n");
    }
    let mut out = String::new();
    for sentence in sentences {
        out.push_str(&format!("{SENTENCE_PREFIX} {}: {}\n", sentence.index, sentence.text));
        for statement in &sentence.statements {
            out.push_str("* ");
            out.push_str(&statement.text);
            out.push('\n');
        }
    }
    out
}

fn first_non_blank_line(raw: &str) -> Option<&str> {
    raw.lines().map(str::trim).find(|l| !l.is_empty())
}

/// Parses the judge's reply to the verification prompt.
///
/// Matching is case-insensitive and tolerates surrounding whitespace and one
/// trailing period. Hedged labels may be written with or without the space.
pub fn parse_verification(raw: &str) -> Result<VerificationLabel, ParseError> {
    let line = first_non_blank_line(raw).unwrap_or("");
    let stripped = line.strip_suffix('.').unwrap_or(line).trim();
    let normalized = stripped
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    let label = match normalized.as_str() {
        "correct" => VerificationLabel::Correct,
        "hedged correct" | "hedgedcorrect" => VerificationLabel::HedgedCorrect,
        "vague" => VerificationLabel::Vague,
        "hedged wrong" | "hedgedwrong" => VerificationLabel::HedgedWrong,
        "wrong" => VerificationLabel::Wrong,
        _ => return Err(ParseError::UnknownLabel(line.to_string())),
    };
    Ok(label)
}

/// Parses the judge's reply to the assessment prompt.
pub fn parse_assessment(raw: &str) -> Result<InfoScore, ParseError> {
    let token = raw.split_whitespace().next().unwrap_or("");
    match token.parse::<i64>() {
        Ok(value) => InfoScore::new(value),
        Err(_) => {
            let digits = token.strip_prefix(['-', '+']).unwrap_or(token);
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                // overflowed i64, so certainly out of range
                let value = if token.starts_with('-') { i64::MIN } else { i64::MAX };
                Err(ParseError::OutOfRangeScore(value))
            } else {
                Err(ParseError::MalformedScore(token.to_string()))
            }
        }
    }
}
