//! File-staged pipeline: annotate, then reward and eval offline.
//!
//! Each stage has an in-memory form (`*_records`) and a file form (`run_*`)
//! driven by a [`PipelineConfig`]. Only annotation talks to the judge.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::resolve_spans;
use crate::artifact::{
    read_jsonl, write_jsonl, AnnotationRecord, EventRecord, InputRecord, JsonlError,
    MetricsRecord, RecordId, RewardRecord, TokenOffsetsRecord,
};
use crate::config::{existing, ConfigError, PipelineConfig};
use crate::eval::{aggregate, render_table, score_sentences, DatasetMetrics, EvalError};
use crate::judge::{Annotator, DocumentStore, HttpJudge, Judge, MockJudge, RetryPolicy, StoreError};
use crate::reward::{build_reward_events, to_token_rewards, RewardConfig, RewardError, RewardEvent, TokenOffsets};

pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const REWARDS_FILE: &str = "rewards.jsonl";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const TABLE_FILE: &str = "table.txt";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("reading {path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: JsonlError,
    },
    #[error("writing {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("loading corpus: {0}")]
    Store(#[from] StoreError),
    #[error("loading mock judge {path}: {source}")]
    MockJudge {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("setting up judge client: {0}")]
    JudgeSetup(String),
    #[error("{failed} of {total} responses could not be annotated (see the error field of those records)")]
    AnnotationFailures { failed: usize, total: usize },
    #[error("record {id}: {source}")]
    Reward {
        id: RecordId,
        #[source]
        source: RewardError,
    },
    #[error("record {id}: no token offsets supplied")]
    MissingOffsets { id: RecordId },
    #[error("duplicate token offsets for record {id}")]
    DuplicateOffsets { id: RecordId },
    #[error("{unresolved} of {total} statements could not be anchored in their response ({rate:.3} > {threshold:.3})")]
    UnresolvedRate {
        unresolved: usize,
        total: usize,
        rate: f64,
        threshold: f64,
    },
    #[error("record {id}: {source}")]
    Eval {
        id: RecordId,
        #[source]
        source: EvalError,
    },
    #[error("no annotations to evaluate")]
    EmptyBatch,
}

impl PipelineError {
    /// Process exit status: 1 usage/config, 2 upstream service, 3 data quality.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_)
            | PipelineError::Input { .. }
            | PipelineError::Output { .. }
            | PipelineError::Store(_)
            | PipelineError::MockJudge { .. } => 1,
            PipelineError::JudgeSetup(_) | PipelineError::AnnotationFailures { .. } => 2,
            PipelineError::Reward { .. }
            | PipelineError::MissingOffsets { .. }
            | PipelineError::DuplicateOffsets { .. }
            | PipelineError::UnresolvedRate { .. }
            | PipelineError::Eval { .. }
            | PipelineError::EmptyBatch => 3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AnnotateOptions {
    pub contexts: usize,
    pub retry: RetryPolicy,
    pub workers: usize,
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
}

/// Annotates every record on a pool of `workers` threads, keeping input order.
/// Failed records are kept with their `error` set.
pub fn annotate_records<J: Judge + ?Sized>(
    records: &[InputRecord],
    judge: &J,
    store: &DocumentStore,
    opts: AnnotateOptions,
) -> Vec<AnnotationRecord> {
    use rayon::prelude::*;
    let annotator = Annotator::new(judge, store).contexts(opts.contexts).retry(opts.retry);
    pool(opts.workers).install(|| {
        records
            .par_iter()
            .map(|input| match annotator.annotate(&input.prompt, &input.response) {
                Ok(annotation) => AnnotationRecord::from_annotation(input.id.clone(), annotation),
                Err(e) => {
                    log::warn!("record {}: {e}", input.id);
                    AnnotationRecord::failed(input, e)
                }
            })
            .collect()
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionStats {
    pub statements: usize,
    pub unresolved_statements: usize,
    pub unresolved_sentences: usize,
    /// Annotation records carrying an error; they produce empty events.
    pub failed_records: usize,
}

impl ResolutionStats {
    pub fn unresolved_rate(&self) -> f64 {
        if self.statements == 0 {
            0.0
        } else {
            self.unresolved_statements as f64 / self.statements as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardOutput {
    pub records: Vec<RewardRecord>,
    pub stats: ResolutionStats,
}

impl RewardOutput {
    pub fn check(&self, max_unresolved_rate: f64) -> Result<(), PipelineError> {
        let rate = self.stats.unresolved_rate();
        if rate > max_unresolved_rate {
            return Err(PipelineError::UnresolvedRate {
                unresolved: self.stats.unresolved_statements,
                total: self.stats.statements,
                rate,
                threshold: max_unresolved_rate,
            });
        }
        Ok(())
    }
}

/// Index of token offsets by record id.
pub fn index_offsets(records: Vec<TokenOffsetsRecord>) -> Result<HashMap<RecordId, TokenOffsets>, PipelineError> {
    let mut map = HashMap::with_capacity(records.len());
    for rec in records {
        let offsets = TokenOffsets::new(rec.offsets).map_err(|source| PipelineError::Reward {
            id: rec.id.clone(),
            source,
        })?;
        if map.insert(rec.id.clone(), offsets).is_some() {
            return Err(PipelineError::DuplicateOffsets { id: rec.id });
        }
    }
    Ok(map)
}

/// Resolves spans, prices statements and sentences, and optionally projects
/// onto tokens. Event values are rounded for the artifact before projection,
/// so `token_rewards` is exactly the per-token sum of the written `events`.
pub fn reward_records(
    annotations: &[AnnotationRecord],
    cfg: &RewardConfig,
    min_ratio: f64,
    offsets: Option<&HashMap<RecordId, TokenOffsets>>,
) -> Result<RewardOutput, PipelineError> {
    let mut stats = ResolutionStats::default();
    let mut records = Vec::with_capacity(annotations.len());

    for annotation in annotations {
        if annotation.error.is_some() {
            stats.failed_records += 1;
        }
        let resolved = resolve_spans(&annotation.response, &annotation.sentences, min_ratio);
        for sentence in &resolved {
            stats.statements += sentence.statements.len();
            stats.unresolved_statements += sentence.statements.iter().filter(|s| s.unresolved).count();
            stats.unresolved_sentences += usize::from(sentence.unresolved);
        }

        let events = match build_reward_events(&annotation.response, &resolved, cfg) {
            Ok(events) => events,
            Err(RewardError::MissingSentenceSpan { sentences, events }) => {
                log::warn!("record {}: sentences {sentences:?} not found in the response", annotation.id);
                events
            }
            Err(source) => {
                return Err(PipelineError::Reward {
                    id: annotation.id.clone(),
                    source,
                })
            }
        };
        let events: Vec<EventRecord> = events.iter().map(EventRecord::from).collect();

        let token_rewards = match offsets {
            None => None,
            Some(map) => {
                let tokens = map.get(&annotation.id).ok_or_else(|| PipelineError::MissingOffsets {
                    id: annotation.id.clone(),
                })?;
                let rounded: Vec<RewardEvent> = events.iter().map(RewardEvent::from).collect();
                let vector = to_token_rewards(&rounded, tokens).map_err(|source| PipelineError::Reward {
                    id: annotation.id.clone(),
                    source,
                })?;
                Some(vector.0)
            }
        };

        records.push(RewardRecord {
            id: annotation.id.clone(),
            response: annotation.response.clone(),
            events,
            token_rewards,
            config_name: cfg.name.clone(),
        });
    }
    Ok(RewardOutput { records, stats })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    #[serde(flatten)]
    pub metrics: DatasetMetrics,
    /// Records skipped because annotation itself failed.
    pub failed_annotations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub responses: Vec<MetricsRecord>,
    pub aggregate: AggregateReport,
}

pub fn eval_records(annotations: &[AnnotationRecord]) -> Result<EvalReport, PipelineError> {
    let mut responses = Vec::with_capacity(annotations.len());
    let mut failed = 0;
    for annotation in annotations {
        if annotation.error.is_some() {
            failed += 1;
            continue;
        }
        let metrics = score_sentences(&annotation.sentences).map_err(|source| PipelineError::Eval {
            id: annotation.id.clone(),
            source,
        })?;
        responses.push(MetricsRecord {
            id: annotation.id.clone(),
            metrics,
        });
    }
    let per_response: Vec<_> = responses.iter().map(|r| r.metrics.clone()).collect();
    let metrics = aggregate(&per_response).map_err(|_| PipelineError::EmptyBatch)?;
    Ok(EvalReport {
        responses,
        aggregate: AggregateReport {
            metrics,
            failed_annotations: failed,
        },
    })
}

fn read_records<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let file = File::open(path).map_err(|e| PipelineError::Input {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    read_jsonl(BufReader::new(file)).map_err(|source| PipelineError::Input {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_parent(path: &Path) -> Result<(), PipelineError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|source| PipelineError::Output {
            path: dir.to_path_buf(),
            source,
        }),
        _ => Ok(()),
    }
}

fn write_records<T: Serialize>(path: &Path, records: &[T]) -> Result<(), PipelineError> {
    ensure_parent(path)?;
    let wrap = |source| PipelineError::Output {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    write_jsonl(BufWriter::new(file), records).map_err(wrap)
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|source| PipelineError::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn output_path(cfg: &PipelineConfig) -> Result<PathBuf, PipelineError> {
    Ok(cfg.paths.output.clone().ok_or(ConfigError::Unset("output"))?)
}

/// Builds the judge named by the config: the mock fixture when one is set,
/// else the HTTP endpoint.
pub fn make_judge(cfg: &PipelineConfig) -> Result<Box<dyn Judge>, PipelineError> {
    match &cfg.mock_judge {
        Some(path) => {
            let mock = MockJudge::load(path).map_err(|source| PipelineError::MockJudge {
                path: path.clone(),
                source,
            })?;
            Ok(Box::new(mock))
        }
        None => {
            let http = HttpJudge::new(cfg.judge.clone()).map_err(|e| PipelineError::JudgeSetup(e.to_string()))?;
            Ok(Box::new(http))
        }
    }
}

fn annotate_options(cfg: &PipelineConfig) -> AnnotateOptions {
    let mut retry = cfg.retry_policy();
    if cfg.mock_judge.is_some() {
        // replayed replies never change between attempts
        retry.backoff = std::time::Duration::ZERO;
    }
    AnnotateOptions {
        contexts: cfg.retrieval.contexts,
        retry,
        workers: cfg.workers,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotateSummary {
    pub records: usize,
    pub failed: usize,
}

fn annotate_stage(cfg: &PipelineConfig, output: &Path) -> Result<AnnotateSummary, PipelineError> {
    let input = existing(&cfg.paths.input, "input")?;
    let corpus = existing(&cfg.paths.corpus, "corpus")?;
    if let Some(mock) = &cfg.mock_judge {
        if !mock.exists() {
            return Err(ConfigError::MissingPath { what: "mock judge", path: mock.clone() }.into());
        }
    }
    let records: Vec<InputRecord> = read_records(&input)?;
    let store = DocumentStore::open(&corpus)?;
    if store.is_empty() {
        return Err(StoreError::EmptyStore.into());
    }
    let judge = make_judge(cfg)?;
    let annotations = annotate_records(&records, judge.as_ref(), &store, annotate_options(cfg));
    write_records(output, &annotations)?;
    let failed = annotations.iter().filter(|a| a.error.is_some()).count();
    Ok(AnnotateSummary {
        records: annotations.len(),
        failed,
    })
}

fn failures_to_result(summary: &AnnotateSummary) -> Result<(), PipelineError> {
    if summary.failed > 0 {
        Err(PipelineError::AnnotationFailures {
            failed: summary.failed,
            total: summary.records,
        })
    } else {
        Ok(())
    }
}

/// `annotate`: input `{id, prompt, response}` lines to an annotation artifact.
/// The artifact is written even when some records fail.
pub fn run_annotate(cfg: &PipelineConfig) -> Result<AnnotateSummary, PipelineError> {
    cfg.validate()?;
    let summary = annotate_stage(cfg, &output_path(cfg)?)?;
    failures_to_result(&summary)?;
    Ok(summary)
}

fn load_offsets(cfg: &PipelineConfig) -> Result<Option<HashMap<RecordId, TokenOffsets>>, PipelineError> {
    if cfg.paths.token_offsets.is_none() {
        return Ok(None);
    }
    let path = existing(&cfg.paths.token_offsets, "token offsets")?;
    Ok(Some(index_offsets(read_records(&path)?)?))
}

fn reward_stage(cfg: &PipelineConfig, input: &Path, output: &Path) -> Result<ResolutionStats, PipelineError> {
    let reward_cfg = cfg.reward_config()?;
    let offsets = load_offsets(cfg)?;
    let annotations: Vec<AnnotationRecord> = read_records(input)?;
    let out = reward_records(&annotations, &reward_cfg, cfg.align.min_ratio, offsets.as_ref())?;
    write_records(output, &out.records)?;
    out.check(cfg.align.max_unresolved_rate)?;
    Ok(out.stats)
}

/// `reward`: annotation artifact to reward artifact. The artifact is written
/// before the unresolved-rate check, so a breach still leaves it on disk.
pub fn run_reward(cfg: &PipelineConfig) -> Result<ResolutionStats, PipelineError> {
    cfg.validate()?;
    let input = existing(&cfg.paths.input, "input")?;
    reward_stage(cfg, &input, &output_path(cfg)?)
}

fn eval_stage(input: &Path, out_dir: &Path, name: &str) -> Result<EvalReport, PipelineError> {
    let annotations: Vec<AnnotationRecord> = read_records(input)?;
    let report = eval_records(&annotations)?;
    write_records(&out_dir.join(METRICS_FILE), &report.responses)?;
    let mut aggregate = serde_json::to_string_pretty(&report.aggregate).expect("metrics serialize");
    aggregate.push('\n');
    write_text(&out_dir.join(AGGREGATE_FILE), &aggregate)?;
    write_text(&out_dir.join(TABLE_FILE), &render_table(name, &report.aggregate.metrics))?;
    Ok(report)
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string())
}

/// `eval`: annotation artifact to a report directory holding per-response
/// metrics, the aggregate document and a plain-text table.
pub fn run_eval(cfg: &PipelineConfig) -> Result<EvalReport, PipelineError> {
    cfg.validate()?;
    let input = existing(&cfg.paths.input, "input")?;
    eval_stage(&input, &output_path(cfg)?, &dataset_name(&input))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSummary {
    pub annotate: AnnotateSummary,
    pub resolution: ResolutionStats,
    pub report: EvalReport,
}

/// All three stages into one output directory. Annotation failures and a
/// breached unresolved rate are reported after every artifact is written.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary, PipelineError> {
    cfg.validate()?;
    let out_dir = output_path(cfg)?;
    let annotations = out_dir.join(ANNOTATIONS_FILE);
    let annotate = annotate_stage(cfg, &annotations)?;

    let mut deferred = failures_to_result(&annotate).err();
    let resolution = match reward_stage(cfg, &annotations, &out_dir.join(REWARDS_FILE)) {
        Ok(stats) => stats,
        Err(e @ PipelineError::UnresolvedRate { .. }) => {
            deferred.get_or_insert(e);
            ResolutionStats::default()
        }
        Err(e) => return Err(e),
    };
    let name = cfg
        .paths
        .input
        .as_deref()
        .map(dataset_name)
        .unwrap_or_else(|| "dataset".to_string());
    let report = eval_stage(&annotations, &out_dir, &name)?;
    match deferred {
        Some(e) => Err(e),
        None => Ok(PipelineSummary {
            annotate,
            resolution,
            report,
        }),
    }
}
