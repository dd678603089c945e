//! Character-level alignment of statements and sentences back onto the
//! response text.
//!
//! Sentences are placed with a longest common substring search, statements
//! inside their sentence with a longest common subsequence search. All
//! offsets count Unicode scalar values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::SentenceAnnotation;

/// Default minimum `matched / needle length` for an alignment to be trusted.
pub const DEFAULT_MIN_RATIO: f64 = 0.7;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlignError {
    #[error("no common character between needle and haystack")]
    NoAlignment,
    #[error("alignment inputs must be non-empty")]
    EmptyInput,
}

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[usize; 2]", try_from = "[usize; 2]")]
pub struct CharRange {
    pub start: usize,
    pub end: usize,
}

impl CharRange {
    /// Builds a non-empty range; returns `None` when `start >= end`.
    pub fn new(start: usize, end: usize) -> Option<Self> {
        (start < end).then_some(CharRange { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, offset: usize) -> bool {
        self.start <= offset && offset < self.end
    }

    pub fn contains_range(&self, other: &CharRange) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// Offset of the final character in the range.
    pub fn last(&self) -> usize {
        self.end - 1
    }

    pub fn shift(self, by: usize) -> CharRange {
        CharRange {
            start: self.start + by,
            end: self.end + by,
        }
    }
}

impl From<CharRange> for [usize; 2] {
    fn from(r: CharRange) -> Self {
        [r.start, r.end]
    }
}

impl TryFrom<[usize; 2]> for CharRange {
    type Error = String;

    fn try_from([start, end]: [usize; 2]) -> Result<Self, Self::Error> {
        CharRange::new(start, end).ok_or_else(|| format!("empty or inverted range [{start}, {end})"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentResult {
    pub range: CharRange,
    pub matched: usize,
    pub ratio: f64,
}

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

/// Locates `needle` in `haystack` through a longest common subsequence.
///
/// The returned range runs from the first to one past the last haystack
/// character of the chosen alignment. Among maximal alignments the one that
/// ends leftmost wins; among those ending there, the tightest.
pub fn lcs_locate(needle: &str, haystack: &str) -> Result<AlignmentResult, AlignError> {
    let a = chars(needle);
    let b = chars(haystack);
    lcs_locate_chars(&a, &b)
}

pub(crate) fn lcs_locate_chars(a: &[char], b: &[char]) -> Result<AlignmentResult, AlignError> {
    if a.is_empty() || b.is_empty() {
        return Err(AlignError::EmptyInput);
    }
    let (n, m) = (a.len(), b.len());
    let width = m + 1;

    // prefix[i * width + j] = LCS(a[..i], b[..j])
    let mut prefix = vec![0u32; (n + 1) * width];
    for i in 1..=n {
        for j in 1..=m {
            prefix[i * width + j] = if a[i - 1] == b[j - 1] {
                prefix[(i - 1) * width + j - 1] + 1
            } else {
                prefix[(i - 1) * width + j].max(prefix[i * width + j - 1])
            };
        }
    }
    let best = prefix[n * width + m];
    if best == 0 {
        return Err(AlignError::NoAlignment);
    }
    let end = (1..=m)
        .find(|&j| prefix[n * width + j] == best)
        .expect("full haystack reaches the maximum");

    // suffix[i * width + j] = LCS(a[i..], b[j..end])
    let mut suffix = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        for j in (0..end).rev() {
            suffix[i * width + j] = if a[i] == b[j] {
                suffix[(i + 1) * width + j + 1] + 1
            } else {
                suffix[(i + 1) * width + j].max(suffix[i * width + j + 1])
            };
        }
    }
    let start = (0..end)
        .rev()
        .find(|&j| suffix[j] == best)
        .expect("window [0, end) reaches the maximum");

    let matched = best as usize;
    Ok(AlignmentResult {
        range: CharRange { start, end },
        matched,
        ratio: matched as f64 / n as f64,
    })
}

/// Locates `needle` in `haystack` through a longest common substring.
///
/// Ties are broken by the smallest haystack start offset.
pub fn substring_locate(needle: &str, haystack: &str) -> Result<AlignmentResult, AlignError> {
    let a = chars(needle);
    let b = chars(haystack);
    substring_locate_chars(&a, &b)
}

pub(crate) fn substring_locate_chars(a: &[char], b: &[char]) -> Result<AlignmentResult, AlignError> {
    if a.is_empty() || b.is_empty() {
        return Err(AlignError::EmptyInput);
    }
    let m = b.len();
    // run[j] = length of the common suffix ending at a[i - 1], b[j - 1]
    let mut prev = vec![0usize; m + 1];
    let mut run = vec![0usize; m + 1];
    let mut best = 0usize;
    let mut best_start = usize::MAX;
    for ai in a {
        for j in 1..=m {
            run[j] = if *ai == b[j - 1] { prev[j - 1] + 1 } else { 0 };
            let len = run[j];
            if len > 0 {
                let start = j - len;
                if len > best || (len == best && start < best_start) {
                    best = len;
                    best_start = start;
                }
            }
        }
        std::mem::swap(&mut prev, &mut run);
    }
    if best == 0 {
        return Err(AlignError::NoAlignment);
    }
    Ok(AlignmentResult {
        range: CharRange {
            start: best_start,
            end: best_start + best,
        },
        matched: best,
        ratio: best as f64 / a.len() as f64,
    })
}

/// Anchors every sentence and statement of `annotation` in `response`.
///
/// Sentences are located in the full response. Statements are located inside
/// the response text covered by their sentence's span, so their ranges are
/// absolute and nested. Anything aligning below `min_ratio` keeps `span =
/// None` and is marked `unresolved`; statements of an unresolved sentence are
/// unresolved too.
pub fn resolve_spans(
    response: &str,
    annotation: &[SentenceAnnotation],
    min_ratio: f64,
) -> Vec<SentenceAnnotation> {
    let response_chars = chars(response);
    annotation
        .iter()
        .map(|sentence| {
            let mut out = sentence.clone();
            let located = substring_locate_chars(&chars(&sentence.text), &response_chars)
                .ok()
                .filter(|hit| hit.ratio >= min_ratio);
            out.span = located.map(|hit| hit.range);
            out.unresolved = located.is_none();

            for statement in &mut out.statements {
                statement.span = None;
                statement.unresolved = true;
                let Some(sentence_span) = out.span else {
                    continue;
                };
                let window = &response_chars[sentence_span.start..sentence_span.end];
                if let Ok(hit) = lcs_locate_chars(&chars(&statement.text), window) {
                    if hit.ratio >= min_ratio {
                        statement.span = Some(hit.range.shift(sentence_span.start));
                        statement.unresolved = false;
                    }
                }
            }
            out
        })
        .collect()
}
