//! Fixture corpus for the command-line tests: twenty prompts, a small
//! reference corpus, word-level token offsets, and a mock judge recorded from
//! a rule-based scripted judge.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use std::collections::HashMap;

use factreward_core::artifact::{write_jsonl, EventRecord, InputRecord, RecordId, RewardRecord, TokenOffsetsRecord};
use factreward_core::judge::{
    DocumentStore, JudgeError, RecordingJudge, RetryPolicy, ScriptedJudge,
};
use factreward_core::pipeline::{annotate_records, index_offsets, reward_records, AnnotateOptions};
use factreward_core::reward::{RewardEvent, RewardKind};
use factreward_core::{to_token_rewards, CharRange, RewardConfig, TokenOffsets};
use serde_json::json;

pub const INPUT: &str = "prompts.jsonl";
pub const CORPUS: &str = "corpus.jsonl";
pub const MOCK: &str = "mock_judge.json";
pub const OFFSETS: &str = "token_offsets.jsonl";
pub const SHARED_REWARDS: &str = "shared/rewards.jsonl";
pub const SHARED_REWARDS_BARE: &str = "shared/rewards_without_tokens.jsonl";
pub const SHARED_PROJECTION: &str = "shared/projection.jsonl";
pub const SHARED_PROJECTION_OFFSETS: &str = "shared/projection_offsets.jsonl";

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn fixture(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_factreward"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("RUST_LOG").output().expect("spawn factreward")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

const DOCUMENTS: [(&str, &str, &str); 10] = [
    ("curie", "Marie Curie", "Marie Curie was a physicist and chemist born in Warsaw in 1867. She won the Nobel Prize in Physics in 1903 and the Nobel Prize in Chemistry in 1911. She conducted pioneering research on radioactivity."),
    ("lovelace", "Ada Lovelace", "Ada Lovelace was an English mathematician born in London in 1815. She wrote the first published algorithm intended for the Analytical Engine designed by Charles Babbage."),
    ("godel", "Kurt Gödel", "Kurt Gödel was a logician born in Brünn in 1906. He published his incompleteness theorems in 1931 while working in Vienna."),
    ("eiffel", "Eiffel Tower", "The Eiffel Tower is a wrought iron lattice tower in Paris. It was completed in 1889 for the World's Fair and was designed by the company of Gustave Eiffel."),
    ("amazon", "Amazon River", "The Amazon River in South America is the largest river by discharge volume of water in the world. It flows through Peru, Colombia and Brazil into the Atlantic Ocean."),
    ("kilimanjaro", "Mount Kilimanjaro", "Mount Kilimanjaro is a dormant volcano in Tanzania. It is the highest mountain in Africa with a summit about 5895 metres above sea level."),
    ("python", "Python", "Python is a programming language created by Guido van Rossum. It was first released in 1991 and emphasizes code readability."),
    ("wall", "Great Wall of China", "The Great Wall of China is a series of fortifications built across northern China. Construction began in the 7th century BC and continued under the Ming dynasty."),
    ("arthur", "Arthur's Magazine", "Arthur's Magazine (1844–1846) was an American literary periodical published in Philadelphia in the 19th century. In May 1846 it was merged into Godey's Lady's Book."),
    ("first", "First for Women", "First for Women is a women's magazine published by Bauer Media Group in the USA. The magazine was started in 1989."),
];

const RECORDS: [(&str, &str); 20] = [
    ("Who was Marie Curie?", "Marie Curie was a physicist and chemist born in Warsaw. She won the Nobel Prize in Physics in 1903, and she won the Nobel Prize in Chemistry in 1911."),
    ("Tell me about Ada Lovelace.", "Ada Lovelace was an English mathematician. She wrote the first published algorithm for the Analytical Engine. She was born in Paris in 1820."),
    ("Who was Kurt Gödel?", "Kurt Gödel was a logician born in Brünn. He published his incompleteness theorems in 1931."),
    ("When was the Eiffel Tower completed?", "The Eiffel Tower was completed in 1889, and it stands in Paris. It is probably the tallest structure on the moon."),
    ("What is the capital of Atlantis?", "I'm sorry, I don't know anything about that place."),
    ("Describe the Amazon River.", "The Amazon River is the largest river by discharge volume of water in the world. It flows into the Atlantic Ocean."),
    ("How tall is Mount Kilimanjaro?", "Mount Kilimanjaro is the highest mountain in Africa. Its summit is about 5895 metres above sea level, and it is a dormant volcano in Tanzania."),
    ("Who created Python?", "Python was created by Guido van Rossum. It was first released in 1991."),
    ("When did construction of the Great Wall begin?", "Construction of the Great Wall of China began in the 7th century BC. It was possibly finished by Napoleon."),
    ("Which magazine was started first, Arthur's Magazine or First for Women?", "Arthur's Magazine was likely started first. First for Women was started in 1989."),
    ("Who discovered penicillin?", "I don't know the answer to that question."),
    ("Where was Marie Curie born?", "Marie Curie was born in Warsaw in 1867. She conducted pioneering research on radioactivity."),
    ("What did Ada Lovelace write?", "Ada Lovelace wrote the first published algorithm intended for the Analytical Engine. The engine was designed by Charles Babbage."),
    ("Where did Gödel work in 1931?", "Gödel was working in Vienna in 1931. He was probably born in Brünn in 1906."),
    ("Who designed the Eiffel Tower?", "The Eiffel Tower was designed by the company of Gustave Eiffel. It is a wrought iron lattice tower."),
    ("Which countries does the Amazon flow through?", "The Amazon flows through Peru, Colombia and Brazil. It also flows through Chile and Argentina."),
    ("Is Kilimanjaro active?", "Kilimanjaro is an active volcano that erupted last year."),
    ("What does Python emphasize?", "Python emphasizes code readability. It was released by Microsoft in 2005."),
    ("When was Arthur's Magazine merged?", "Arthur's Magazine was merged into Godey's Lady's Book in May 1846. It was published in Philadelphia."),
    ("Who publishes First for Women?", "First for Women is published by Bauer Media Group in the USA. It is a women's magazine."),
];

/// Twenty input records; the last one carries a string id.
pub fn input_records() -> Vec<InputRecord> {
    RECORDS
        .iter()
        .enumerate()
        .map(|(i, (prompt, response))| InputRecord {
            id: if i == 19 { RecordId::Str("q-20".into()) } else { RecordId::Int(i as i64 + 1) },
            prompt: prompt.to_string(),
            response: response.to_string(),
        })
        .collect()
}

fn corpus_lines() -> Vec<serde_json::Value> {
    DOCUMENTS.iter().map(|(id, title, text)| json!({"id": id, "title": title, "text": text})).collect()
}

/// One token per maximal run of whitespace or non-whitespace, in chars.
pub fn word_offsets(text: &str) -> Vec<CharRange> {
    let chars: Vec<char> = text.chars().collect();
    let mut ranges = Vec::new();
    let mut start = 0;
    for i in 1..=chars.len() {
        if i == chars.len() || chars[i].is_whitespace() != chars[start].is_whitespace() {
            ranges.push(CharRange::new(start, i).unwrap());
            start = i;
        }
    }
    ranges
}

fn last_between<'a>(text: &'a str, open: &str, close: &str) -> &'a str {
    let from = text.rfind(open).map(|i| i + open.len()).unwrap_or(0);
    let rest = &text[from..];
    &rest[..rest.find(close).unwrap_or(rest.len())]
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.chars().count() >= 4)
        .map(str::to_lowercase)
        .collect()
}

fn sentences(response: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = response.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        current.push(c);
        if c == '.' && chars.get(i + 1).is_none_or(|n| n.is_whitespace()) {
            out.push(current.trim().to_string());
            current.clear();
        }
    }
    if !current.trim().is_empty() {
        out.push(current.trim().to_string());
    }
    out
}

fn extract(response: &str) -> String {
    let mut out = String::new();
    let mut n = 0;
    for sentence in sentences(response) {
        if sentence.contains("don't know") || sentence.contains("sorry") {
            continue;
        }
        n += 1;
        out.push_str(&format!(">> Sentence {n}: {sentence}\n"));
        for clause in sentence.trim_end_matches('.').split(", and ") {
            out.push_str(&format!("* {}.\n", clause.trim()));
        }
    }
    if n == 0 {
        "No statements".to_string()
    } else {
        out
    }
}

fn verify(materials: &str, statement: &str) -> &'static str {
    let known = words(materials);
    let terms = words(statement);
    let hits = terms.iter().filter(|t| known.contains(t)).count();
    let hedged = statement.contains("likely") || statement.contains("probably") || statement.contains("possibly");
    let ratio = if terms.is_empty() { 0.0 } else { hits as f64 / terms.len() as f64 };
    match (ratio, hedged) {
        (r, false) if r >= 0.8 => "Correct",
        (r, true) if r >= 0.8 => "Hedged Correct",
        (r, _) if r >= 0.5 => "Vague",
        (_, true) => "HedgedWrong",
        _ => "Wrong.",
    }
}

fn assess(question: &str, statement: &str) -> &'static str {
    let asked = words(question);
    let shared = words(statement).iter().filter(|w| asked.contains(w)).count();
    let numeric = statement.chars().any(|c| c.is_ascii_digit());
    match (shared, numeric) {
        (s, true) if s >= 2 => "5",
        (s, _) if s >= 2 => "4",
        (1, _) => "3",
        (0, true) => "2",
        _ => "1",
    }
}

/// Rule-based judge standing in for a real model when recording fixtures.
pub fn scripted_reply(prompt: &str) -> Result<String, JudgeError> {
    let reply = if prompt.ends_with("# Statements") {
        extract(last_between(prompt, "# Response\n", "\n\n# Statements"))
    } else if prompt.ends_with("# Verification") {
        verify(
            last_between(prompt, "# Materials\n", "\n# Statement\n"),
            last_between(prompt, "# Statement\n", "\n# Verification"),
        )
        .to_string()
    } else if prompt.ends_with("# Evaluation") {
        assess(
            last_between(prompt, "# Question\n", "\n# Response\n"),
            last_between(prompt, "# Statement\n", "\n# Evaluation"),
        )
        .to_string()
    } else {
        return Err(JudgeError::BadResponse("unrecognised prompt".into()));
    };
    Ok(reply)
}

pub struct Fixtures {
    pub files: Vec<(&'static str, String)>,
}

fn jsonl<T: serde::Serialize>(records: &[T]) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, records).unwrap();
    String::from_utf8(buf).unwrap()
}

/// Single event at character 10 over three tokens; projects to `[0, 0.45, 0]`.
fn projection_example() -> (RewardRecord, TokenOffsetsRecord) {
    let id = RecordId::Str("projection".into());
    let offsets = TokenOffsets::from_pairs(&[(0, 5), (5, 12), (12, 20)]).unwrap();
    let events = [RewardEvent { offset: 10, value: 0.45, kind: RewardKind::Truth }];
    let vector = to_token_rewards(&events, &offsets).unwrap();
    let record = RewardRecord {
        id: id.clone(),
        response: "The capital is Paris".into(),
        events: events.iter().map(EventRecord::from).collect(),
        token_rewards: Some(vector.0),
        config_name: "qwen".into(),
    };
    (record, TokenOffsetsRecord { id, offsets: offsets.ranges().to_vec() })
}

pub fn build_fixtures() -> Fixtures {
    let records = input_records();
    let corpus = jsonl(&corpus_lines());
    let store = DocumentStore::from_jsonl(corpus.as_bytes()).unwrap();
    let recorder = RecordingJudge::new(ScriptedJudge(scripted_reply));
    let options = AnnotateOptions {
        contexts: 3,
        retry: RetryPolicy::immediate(0),
        workers: 1,
    };
    let annotations = annotate_records(&records, &recorder, &store, options);
    assert!(annotations.iter().all(|a| a.error.is_none()));
    let offsets: Vec<TokenOffsetsRecord> = records
        .iter()
        .map(|r| TokenOffsetsRecord { id: r.id.clone(), offsets: word_offsets(&r.response) })
        .collect();

    let index: HashMap<RecordId, TokenOffsets> = index_offsets(offsets.clone()).unwrap();
    let qwen = RewardConfig::qwen();
    let with_tokens = reward_records(&annotations, &qwen, 0.7, Some(&index)).unwrap();
    let bare = reward_records(&annotations, &qwen, 0.7, None).unwrap();
    let (projection, projection_offsets) = projection_example();

    Fixtures {
        files: vec![
            (INPUT, jsonl(&records)),
            (CORPUS, corpus),
            (MOCK, recorder.into_mock().to_json()),
            (OFFSETS, jsonl(&offsets)),
            (SHARED_REWARDS, jsonl(&with_tokens.records)),
            (SHARED_REWARDS_BARE, jsonl(&bare.records)),
            (SHARED_PROJECTION, jsonl(&[projection])),
            (SHARED_PROJECTION_OFFSETS, jsonl(&[projection_offsets])),
        ],
    }
}

/// Runs the full pipeline over the committed fixtures into `out`.
pub fn run_fixture_pipeline(out: &Path, with_offsets: bool) -> Output {
    let input = fixture(INPUT);
    let corpus = fixture(CORPUS);
    let mock = fixture(MOCK);
    let offsets = fixture(OFFSETS);
    let mut args = vec![
        "pipeline",
        "--input",
        path_str(&input),
        "--corpus",
        path_str(&corpus),
        "--mock-judge",
        path_str(&mock),
        "--output",
        path_str(out),
    ];
    if with_offsets {
        args.extend(["--token-offsets", path_str(&offsets)]);
    }
    run(&args)
}
