//! Reference document store with BM25 ranking.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("document store is empty")]
    EmptyStore,
    #[error("document on line {line} has an empty id")]
    EmptyId { line: usize },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("corpus line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("reading corpus: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Passage {
    pub id: String,
    pub title: String,
    pub text: String,
    pub score: f64,
}

/// Lowercased alphanumeric runs; everything else separates terms.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug)]
struct Posting {
    doc: usize,
    tf: u32,
}

/// Immutable after construction; one passage per document.
#[derive(Debug)]
pub struct DocumentStore {
    docs: Vec<Document>,
    doc_len: Vec<u32>,
    avg_len: f64,
    postings: HashMap<String, Vec<Posting>>,
}

impl DocumentStore {
    pub fn new(docs: Vec<Document>) -> Result<Self, StoreError> {
        let mut seen = HashSet::new();
        for (i, doc) in docs.iter().enumerate() {
            if doc.id.trim().is_empty() {
                return Err(StoreError::EmptyId { line: i + 1 });
            }
            if !seen.insert(doc.id.as_str()) {
                return Err(StoreError::DuplicateId(doc.id.clone()));
            }
        }

        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut doc_len = Vec::with_capacity(docs.len());
        for (idx, doc) in docs.iter().enumerate() {
            let terms = tokenize(&index_text(doc));
            doc_len.push(terms.len() as u32);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for term in terms {
                *tf.entry(term).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push(Posting { doc: idx, tf: count });
            }
        }
        let total: u64 = doc_len.iter().map(|&l| u64::from(l)).sum();
        let avg_len = if docs.is_empty() { 0.0 } else { total as f64 / docs.len() as f64 };
        Ok(DocumentStore {
            docs,
            doc_len,
            avg_len,
            postings,
        })
    }

    /// Loads line-delimited JSON `{id, title, text}` records; blank lines are skipped.
    pub fn from_jsonl(reader: impl BufRead) -> Result<Self, StoreError> {
        let mut docs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let doc = serde_json::from_str(&line).map_err(|source| StoreError::Json { line: i + 1, source })?;
            docs.push(doc);
        }
        Self::new(docs)
    }

    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let file = std::fs::File::open(path)?;
        Self::from_jsonl(std::io::BufReader::new(file))
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    fn idf(&self, doc_freq: usize) -> f64 {
        let n = self.docs.len() as f64;
        let df = doc_freq as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// BM25 score of every document for `query`, in store order.
    pub fn scores(&self, query: &str) -> Vec<f64> {
        let mut scores = vec![0.0; self.docs.len()];
        let mut terms = tokenize(query);
        terms.sort();
        terms.dedup();
        for term in terms {
            let Some(list) = self.postings.get(&term) else {
                continue;
            };
            let idf = self.idf(list.len());
            for posting in list {
                let tf = f64::from(posting.tf);
                let len_norm = if self.avg_len > 0.0 {
                    f64::from(self.doc_len[posting.doc]) / self.avg_len
                } else {
                    0.0
                };
                scores[posting.doc] +=
                    idf * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * (1.0 - BM25_B + BM25_B * len_norm));
            }
        }
        scores
    }

    /// Top `l` passages for `statement`, best first. Equal scores fall back to
    /// ascending document id. Documents without any matching term are still
    /// eligible, so the result holds `min(l, len)` passages.
    pub fn retrieve(&self, statement: &str, l: usize) -> Result<Vec<Passage>, StoreError> {
        if self.docs.is_empty() {
            return Err(StoreError::EmptyStore);
        }
        let scores = self.scores(statement);
        let mut order: Vec<usize> = (0..self.docs.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| self.docs[a].id.cmp(&self.docs[b].id))
        });
        Ok(order
            .into_iter()
            .take(l)
            .map(|i| Passage {
                id: self.docs[i].id.clone(),
                title: self.docs[i].title.clone(),
                text: self.docs[i].text.clone(),
                score: scores[i],
            })
            .collect())
    }
}

fn index_text(doc: &Document) -> String {
    if doc.title.is_empty() {
        doc.text.clone()
    } else {
        format!("{} {}", doc.title, doc.text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIRST_FOR_WOMEN: &str = "First for Women is a women's magazine published by Bauer Media Group in the USA. The magazine was started in 1989. It is based in Englewood Cliffs, New Jersey. In 2011 the circulation of the magazine was 1,310,696 copies.";
    pub(crate) const ARTHURS_MAGAZINE: &str = "Arthur's Magazine (1844–1846) was an American literary periodical published in Philadelphia in the 19th century. Edited by T.S. Arthur, it featured work by Edgar A. Poe, J.H. Ingraham, Sarah Josepha Hale, Thomas G. Spear, and others. In May 1846 it was merged into \"Godey's Lady's Book\".";

    fn doc(id: &str, text: &str) -> Document {
        Document {
            id: id.to_string(),
            title: String::new(),
            text: text.to_string(),
        }
    }

    #[test]
    fn tokenizer_splits_on_punctuation() {
        assert_eq!(tokenize("Arthur's Magazine, 1844–1846!"), ["arthur", "s", "magazine", "1844", "1846"]);
    }

    #[test]
    fn single_document_is_always_returned() {
        let store = DocumentStore::new(vec![doc("only", "completely unrelated text")]).unwrap();
        let hits = store.retrieve("Arthur's Magazine", 3).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].id, "only");
        assert_eq!(hits[0].score, 0.0);
    }

    #[test]
    fn arthurs_magazine_ranks_first() {
        let store = DocumentStore::new(vec![
            doc("first-for-women", FIRST_FOR_WOMEN),
            doc("arthurs-magazine", ARTHURS_MAGAZINE),
        ])
        .unwrap();
        let hits = store.retrieve("Arthur's Magazine was founded", 3).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].id, "arthurs-magazine");
        assert!(hits[0].score > hits[1].score);
    }

    #[test]
    fn ties_break_on_id() {
        let store = DocumentStore::new(vec![doc("b", "same words"), doc("a", "same words"), doc("c", "other")]).unwrap();
        let ids: Vec<_> = store.retrieve("same", 10).unwrap().into_iter().map(|p| p.id).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn store_validation() {
        assert!(matches!(DocumentStore::new(vec![doc("", "x")]), Err(StoreError::EmptyId { line: 1 })));
        assert!(matches!(
            DocumentStore::new(vec![doc("a", "x"), doc("a", "y")]),
            Err(StoreError::DuplicateId(_))
        ));
        let empty = DocumentStore::new(vec![]).unwrap();
        assert!(matches!(empty.retrieve("x", 1), Err(StoreError::EmptyStore)));
    }

    #[test]
    fn jsonl_ingestion() {
        let data = "{\"id\":\"a\",\"title\":\"A\",\"text\":\"alpha\"}\n\n{\"id\":\"b\",\"text\":\"beta\"}\n";
        let store = DocumentStore::from_jsonl(data.as_bytes()).unwrap();
        assert_eq!(store.len(), 2);
        assert!(matches!(
            DocumentStore::from_jsonl("{\"id\":1}".as_bytes()),
            Err(StoreError::Json { line: 1, .. })
        ));
    }
}
