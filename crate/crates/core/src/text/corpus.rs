use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{split_sentences, split_words, Domain, TextError};
use crate::exec::Exec;
use crate::seed;

/// A review split into sentences, each a list of lowercased word tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDoc {
    pub doc_id: String,
    pub sentences: Vec<Vec<String>>,
    pub domain: Domain,
}

impl ReviewDoc {
    pub fn from_text(doc_id: impl Into<String>, text: &str, domain: Domain) -> ReviewDoc {
        let sentences = split_sentences(text)
            .iter()
            .map(|s| split_words(s).into_iter().map(|w| w.text).collect::<Vec<_>>())
            .filter(|toks| !toks.is_empty())
            .collect();
        ReviewDoc { doc_id: doc_id.into(), sentences, domain }
    }

    pub fn num_sentences(&self) -> usize {
        self.sentences.len()
    }
}

/// One line of the review input format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawReview {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

/// Read line-delimited JSON reviews (`{"text": ..., "id": ...}`). Blank lines
/// are skipped; reviews without an id get `line-<n>` (1-based).
pub fn read_reviews(path: &Path) -> Result<Vec<RawReview>, TextError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut r: RawReview = serde_json::from_str(&line)
            .map_err(|e| TextError::BadRecord { line: i + 1, reason: e.to_string() })?;
        if r.id.is_none() {
            r.id = Some(format!("line-{}", i + 1));
        }
        out.push(r);
    }
    Ok(out)
}

/// Lowercased, punctuation-separated, single-space form used for duplicate
/// detection.
pub fn normalize_sentence(text: &str) -> String {
    let words: Vec<String> = split_words(text).into_iter().map(|w| w.text).collect();
    words.join(" ")
}

/// Keep reviews with at least two sentences.
pub fn filter_short_reviews(docs: Vec<ReviewDoc>) -> Vec<ReviewDoc> {
    docs.into_iter().filter(|d| d.num_sentences() >= 2).collect()
}

/// Drop every review containing a sentence whose normalized form is in
/// `eval_sentences`.
pub fn dedup_against_eval(docs: Vec<ReviewDoc>, eval_sentences: &HashSet<String>) -> Vec<ReviewDoc> {
    docs.into_iter()
        .filter(|d| !d.sentences.iter().any(|s| eval_sentences.contains(&s.join(" "))))
        .collect()
}

/// Shuffle whole documents with `seed` and take them until at least `n`
/// sentences are covered.
pub fn sample_sentences(docs: Vec<ReviewDoc>, n: usize, seed: u64) -> Result<Vec<ReviewDoc>, TextError> {
    let total: usize = docs.iter().map(ReviewDoc::num_sentences).sum();
    if total < n {
        return Err(TextError::InsufficientData(format!(
            "requested {n} sentences but only {total} are available"
        )));
    }
    let mut docs = docs;
    docs.shuffle(&mut seed::rng_for(seed, "sample_sentences"));
    let mut taken = 0;
    let mut count = 0;
    while taken < n {
        taken += docs[count].num_sentences();
        count += 1;
    }
    docs.truncate(count);
    Ok(docs)
}

/// Counts reported by corpus preparation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub input_docs: usize,
    pub dropped_short: usize,
    pub dedup_removed: usize,
    pub doc_count: usize,
    pub sentence_count: usize,
}

impl fmt::Display for CorpusManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input_docs = {}", self.input_docs)?;
        writeln!(f, "dropped_short = {}", self.dropped_short)?;
        writeln!(f, "dedup_removed = {}", self.dedup_removed)?;
        writeln!(f, "doc_count = {}", self.doc_count)?;
        writeln!(f, "sentence_count = {}", self.sentence_count)
    }
}

/// split -> filter -> dedup -> (optional) sample. Splitting runs per document
/// through `exec`; the result does not depend on the mode.
pub fn prepare_corpus(
    reviews: &[RawReview],
    domain: Domain,
    eval_sentences: &HashSet<String>,
    sample: Option<usize>,
    seed: u64,
    exec: Exec,
) -> Result<(Vec<ReviewDoc>, CorpusManifest), TextError> {
    let docs: Vec<ReviewDoc> = exec.map(reviews, |r| {
        ReviewDoc::from_text(r.id.clone().unwrap_or_default(), &r.text, domain)
    });
    let input_docs = docs.len();
    let docs = filter_short_reviews(docs);
    let dropped_short = input_docs - docs.len();
    let before = docs.len();
    let docs = dedup_against_eval(docs, eval_sentences);
    let dedup_removed = before - docs.len();
    let docs = match sample {
        Some(n) => sample_sentences(docs, n, seed)?,
        None => docs,
    };
    let manifest = CorpusManifest {
        input_docs,
        dropped_short,
        dedup_removed,
        doc_count: docs.len(),
        sentence_count: docs.iter().map(ReviewDoc::num_sentences).sum(),
    };
    Ok((docs, manifest))
}
