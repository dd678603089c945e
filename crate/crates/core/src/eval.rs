//! Factual precision metrics over labeled annotations.
//!
//! A statement counts as correct when labeled `Correct` or `HedgedCorrect`;
//! `Vague`, `HedgedWrong` and `Wrong` count as incorrect. A response with no
//! statements is a refusal and is excluded from the per-response averages.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::SentenceAnnotation;
use crate::judge::ResponseAnnotation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("cannot aggregate an empty batch")]
    EmptyBatch,
    #[error("statement {statement} of sentence {sentence} has no verification label")]
    Unlabeled { sentence: usize, statement: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMetrics {
    pub correct: usize,
    pub incorrect: usize,
    pub responded: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factscore: Option<f64>,
}

impl ResponseMetrics {
    pub fn from_counts(correct: usize, incorrect: usize) -> Self {
        let total = correct + incorrect;
        ResponseMetrics {
            correct,
            incorrect,
            responded: total > 0,
            factscore: (total > 0).then(|| correct as f64 / total as f64),
        }
    }

    pub fn refusal() -> Self {
        Self::from_counts(0, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetrics {
    pub total: usize,
    pub responded: usize,
    /// Mean correct statements per responded prompt.
    pub avg_correct: f64,
    /// Mean incorrect statements per responded prompt.
    pub avg_incorrect: f64,
    /// Mean correct statements over every prompt, refusals included.
    pub avg_correct_all: f64,
    pub avg_incorrect_all: f64,
    pub response_ratio: f64,
    /// Mean factscore over responded prompts; 0 when every prompt was refused.
    pub score: f64,
    pub refusals_only: bool,
}

pub fn score_sentences(sentences: &[SentenceAnnotation]) -> Result<ResponseMetrics, EvalError> {
    let mut correct = 0;
    let mut incorrect = 0;
    for sentence in sentences {
        for (i, statement) in sentence.statements.iter().enumerate() {
            let label = statement.verification.ok_or(EvalError::Unlabeled {
                sentence: sentence.index,
                statement: i + 1,
            })?;
            if label.is_supported() {
                correct += 1;
            } else {
                incorrect += 1;
            }
        }
    }
    Ok(ResponseMetrics::from_counts(correct, incorrect))
}

pub fn score_response(annotation: &ResponseAnnotation) -> Result<ResponseMetrics, EvalError> {
    score_sentences(&annotation.sentences)
}

pub fn aggregate(metrics: &[ResponseMetrics]) -> Result<DatasetMetrics, EvalError> {
    if metrics.is_empty() {
        return Err(EvalError::EmptyBatch);
    }
    let total = metrics.len();
    let answered: Vec<&ResponseMetrics> = metrics.iter().filter(|m| m.responded).collect();
    let responded = answered.len();
    let mean = |xs: &mut dyn Iterator<Item = f64>, n: usize| if n == 0 { 0.0 } else { xs.sum::<f64>() / n as f64 };

    let sum_correct: usize = metrics.iter().map(|m| m.correct).sum();
    let sum_incorrect: usize = metrics.iter().map(|m| m.incorrect).sum();
    let scores: Vec<f64> = metrics.iter().filter_map(|m| m.factscore).collect();

    Ok(DatasetMetrics {
        total,
        responded,
        avg_correct: mean(&mut answered.iter().map(|m| m.correct as f64), responded),
        avg_incorrect: mean(&mut answered.iter().map(|m| m.incorrect as f64), responded),
        avg_correct_all: sum_correct as f64 / total as f64,
        avg_incorrect_all: sum_incorrect as f64 / total as f64,
        response_ratio: responded as f64 / total as f64,
        score: mean(&mut scores.iter().copied(), scores.len()),
        refusals_only: responded == 0,
    })
}

/// Plain-text table with the usual `#Cor. #Inc. %Res. Score` columns.
pub fn render_table(name: &str, m: &DatasetMetrics) -> String {
    let width = name.chars().count().max(7);
    let mut out = String::new();
    out.push_str(&format!(
        "{:<width$}  {:>7}  {:>7}  {:>6}  {:>6}\n",
        "Dataset", "#Cor.", "#Inc.", "%Res.", "Score"
    ));
    out.push_str(&format!(
        "{:<width$}  {:>7.2}  {:>7.2}  {:>6.2}  {:>6.3}\n",
        name, m.avg_correct, m.avg_incorrect, m.response_ratio, m.score
    ));
    if m.refusals_only {
        out.push_str("(every response was a refusal; score reported as 0)\n");
    }
    out
}
