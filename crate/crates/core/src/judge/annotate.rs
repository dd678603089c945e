use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompts::{assessment_prompt, extraction_prompt, format_materials, verification_prompt};
use super::retrieval::{DocumentStore, StoreError};
use super::{Judge, JudgeError};
use crate::annotation::{
    parse_assessment, parse_extraction, parse_verification, InfoScore, ParseError,
    SentenceAnnotation, VerificationLabel,
};

/// Default number of reference passages per verification prompt.
pub const DEFAULT_CONTEXTS: usize = 3;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("judge unavailable for statement extraction after {attempts} attempts: {last}")]
    JudgeUnavailable { attempts: u32, last: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("number of retrieved contexts must be at least 1")]
    ZeroContexts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    /// Delay before the first retry; doubled for each further retry.
    pub backoff: Duration,
}

impl RetryPolicy {
    pub fn immediate(max_retries: u32) -> Self {
        RetryPolicy {
            max_retries,
            backoff: Duration::ZERO,
        }
    }
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            backoff: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, Error)]
enum CallError {
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// How one judge call for a statement went.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallOutcome {
    pub attempts: u32,
    /// True when every attempt failed and the fallback value was used.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fallback: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementProvenance {
    /// Sentence ordinal as emitted by the judge.
    pub sentence: usize,
    /// 1-based position of the statement within its sentence.
    pub statement: usize,
    /// Identifiers of the documents shown as verification materials.
    pub contexts: Vec<String>,
    pub verification: CallOutcome,
    pub assessment: CallOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseAnnotation {
    pub prompt: String,
    pub response: String,
    pub sentences: Vec<SentenceAnnotation>,
    pub provenance: Vec<StatementProvenance>,
}

impl ResponseAnnotation {
    pub fn statement_count(&self) -> usize {
        self.sentences.iter().map(|s| s.statements.len()).sum()
    }
}

/// Runs the extraction, verification and assessment prompts against a judge.
pub struct Annotator<'a, J: ?Sized> {
    judge: &'a J,
    store: &'a DocumentStore,
    contexts: usize,
    retry: RetryPolicy,
}

impl<'a, J: Judge + ?Sized> Annotator<'a, J> {
    pub fn new(judge: &'a J, store: &'a DocumentStore) -> Self {
        Annotator {
            judge,
            store,
            contexts: DEFAULT_CONTEXTS,
            retry: RetryPolicy::default(),
        }
    }

    pub fn contexts(mut self, l: usize) -> Self {
        self.contexts = l;
        self
    }

    pub fn retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn call<T>(
        &self,
        prompt: &Result<String, JudgeError>,
        parse: impl Fn(&str) -> Result<T, ParseError>,
    ) -> (Result<T, CallError>, u32) {
        let prompt = match prompt {
            Ok(p) => p,
            // a prompt that cannot be rendered will not render on retry either
            Err(e) => return (Err(e.clone().into()), 0),
        };
        let mut attempts = 0;
        let mut delay = self.retry.backoff;
        loop {
            attempts += 1;
            let result = self
                .judge
                .complete(prompt)
                .map_err(CallError::from)
                .and_then(|reply| parse(&reply).map_err(CallError::from));
            match result {
                Ok(value) => return (Ok(value), attempts),
                Err(err) if attempts > self.retry.max_retries => return (Err(err), attempts),
                Err(err) => {
                    log::debug!("judge call attempt {attempts} failed: {err}");
                    if !delay.is_zero() {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
    }

    /// Annotates one (prompt, response) pair.
    ///
    /// A failed verification leaves the statement `Vague`; a failed assessment
    /// gives it the lowest informativeness score. Both are noted in the
    /// statement's provenance. Only a failed extraction is an error.
    pub fn annotate(&self, prompt: &str, response: &str) -> Result<ResponseAnnotation, AnnotateError> {
        if self.contexts == 0 {
            return Err(AnnotateError::ZeroContexts);
        }
        if self.store.is_empty() {
            return Err(StoreError::EmptyStore.into());
        }
        let mut sentences = if response.trim().is_empty() {
            Vec::new()
        } else {
            let (parsed, attempts) = self.call(&extraction_prompt(response), parse_extraction);
            parsed.map_err(|e| AnnotateError::JudgeUnavailable {
                attempts,
                last: e.to_string(),
            })?
        };

        let positions: Vec<(usize, usize)> = sentences
            .iter()
            .enumerate()
            .flat_map(|(si, s)| (0..s.statements.len()).map(move |ti| (si, ti)))
            .collect();

        let labeled = positions
            .par_iter()
            .map(|&(si, ti)| {
                let statement = &sentences[si].statements[ti].text;
                self.label_statement(prompt, response, statement)
            })
            .collect::<Result<Vec<_>, AnnotateError>>()?;

        let mut provenance = Vec::with_capacity(labeled.len());
        for (&(si, ti), (label, info, contexts, verification, assessment)) in positions.iter().zip(labeled) {
            let sentence = &mut sentences[si];
            let statement = &mut sentence.statements[ti];
            statement.verification = Some(label);
            statement.info = Some(info);
            provenance.push(StatementProvenance {
                sentence: sentence.index,
                statement: ti + 1,
                contexts,
                verification,
                assessment,
            });
        }

        Ok(ResponseAnnotation {
            prompt: prompt.to_string(),
            response: response.to_string(),
            sentences,
            provenance,
        })
    }

    #[allow(clippy::type_complexity)]
    fn label_statement(
        &self,
        prompt: &str,
        response: &str,
        statement: &str,
    ) -> Result<(VerificationLabel, InfoScore, Vec<String>, CallOutcome, CallOutcome), AnnotateError> {
        let passages = self.store.retrieve(statement, self.contexts)?;
        let materials = format_materials(passages.iter().map(|p| p.text.as_str()));
        let contexts = passages.into_iter().map(|p| p.id).collect();

        let (verified, attempts) = self.call(&verification_prompt(&materials, statement), parse_verification);
        let (label, verification) = match verified {
            Ok(label) => (label, CallOutcome { attempts, fallback: false, note: None }),
            Err(e) => (
                VerificationLabel::Vague,
                CallOutcome {
                    attempts,
                    fallback: true,
                    note: Some(format!("verification failed, defaulted to Vague: {e}")),
                },
            ),
        };

        let (assessed, attempts) = self.call(&assessment_prompt(prompt, response, statement), parse_assessment);
        let (info, assessment) = match assessed {
            Ok(score) => (score, CallOutcome { attempts, fallback: false, note: None }),
            Err(e) => (
                InfoScore::MIN,
                CallOutcome {
                    attempts,
                    fallback: true,
                    note: Some(format!("assessment failed, defaulted to 1: {e}")),
                },
            ),
        };
        Ok((label, info, contexts, verification, assessment))
    }
}

/// Annotates with `l` contexts per statement and the given retry policy.
pub fn annotate_response<J: Judge + ?Sized>(
    prompt: &str,
    response: &str,
    judge: &J,
    store: &DocumentStore,
    l: usize,
    retry: RetryPolicy,
) -> Result<ResponseAnnotation, AnnotateError> {
    Annotator::new(judge, store).contexts(l).retry(retry).annotate(prompt, response)
}
