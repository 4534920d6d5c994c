//! Tokenization, vocabulary, sentence splitting, review-corpus preparation and
//! SemEval 2014 Task 4 ingestion.

mod corpus;
mod semeval;
mod sentences;
mod tokenize;
mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{
    dedup_against_eval, filter_short_reviews, normalize_sentence, prepare_corpus,
    read_reviews, sample_sentences, CorpusManifest, RawReview, ReviewDoc,
};
pub use semeval::{parse_semeval_str, parse_semeval_xml, write_semeval_xml, ClassCounts, LabelCounts};
pub use sentences::{split_sentences, ABBREVIATIONS};
pub use tokenize::{split_words, tokenize, WordSpan};
pub use vocab::{SpecialIds, Vocab, CLS, MASK, PAD, SEP, UNK};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("offset out of range in sentence {sentence:?}: [{from}, {to})")]
    OffsetOutOfRange { sentence: String, from: usize, to: usize },
    #[error("invalid review record on line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
    #[error("invalid vocabulary: {0}")]
    BadVocab(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Review / dataset domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Laptops,
    Restaurants,
}

impl Domain {
    pub const ALL: [Domain; 2] = [Domain::Laptops, Domain::Restaurants];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Laptops => "laptops",
            Domain::Restaurants => "restaurants",
        }
    }

    pub fn other(self) -> Domain {
        match self {
            Domain::Laptops => Domain::Restaurants,
            Domain::Restaurants => Domain::Laptops,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "laptops" | "laptop" | "lapt" => Ok(Domain::Laptops),
            "restaurants" | "restaurant" | "rest" => Ok(Domain::Restaurants),
            other => Err(format!("unknown domain {other:?}")),
        }
    }
}

/// Domain choice for LM finetuning or supervised training: one domain or
/// both combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainSet {
    Laptops,
    Restaurants,
    Joint,
}

impl DomainSet {
    pub const ALL: [DomainSet; 3] = [DomainSet::Laptops, DomainSet::Restaurants, DomainSet::Joint];

    pub fn name(self) -> &'static str {
        match self {
            DomainSet::Laptops => "laptops",
            DomainSet::Restaurants => "restaurants",
            DomainSet::Joint => "joint",
        }
    }

    pub fn single(self) -> Option<Domain> {
        match self {
            DomainSet::Laptops => Some(Domain::Laptops),
            DomainSet::Restaurants => Some(Domain::Restaurants),
            DomainSet::Joint => None,
        }
    }

    pub fn domains(self) -> Vec<Domain> {
        self.single().map_or_else(|| Domain::ALL.to_vec(), |d| vec![d])
    }
}

impl From<Domain> for DomainSet {
    fn from(d: Domain) -> Self {
        match d {
            Domain::Laptops => DomainSet::Laptops,
            Domain::Restaurants => DomainSet::Restaurants,
        }
    }
}

impl fmt::Display for DomainSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DomainSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "joint" | "both" | "lapt+rest" => Ok(DomainSet::Joint),
            other => other.parse::<Domain>().map(DomainSet::from),
        }
    }
}

/// Sentiment polarity. The index order (positive, negative, neutral) is the
/// class order of every probability vector in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Neutral,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Positive, Polarity::Negative, Polarity::Neutral];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Polarity> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Polarity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "positive" => Ok(Polarity::Positive),
            "negative" => Ok(Polarity::Negative),
            "neutral" => Ok(Polarity::Neutral),
            other => Err(format!("unknown polarity {other:?}")),
        }
    }
}

/// Which split a dataset came from. Training code refuses test data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One aspect-target sentiment instance: a tokenized sentence, the target
/// span inside it, and the gold polarity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtscExample {
    pub tokens: Vec<String>,
    pub target_start: usize,
    pub target_len: usize,
    pub label: Polarity,
    pub domain: Domain,
}

impl AtscExample {
    pub fn target(&self) -> &[String] {
        &self.tokens[self.target_start..self.target_start + self.target_len]
    }

    pub fn target_range(&self) -> std::ops::Range<usize> {
        self.target_start..self.target_start + self.target_len
    }

    pub fn is_valid(&self) -> bool {
        self.target_len >= 1 && self.target_start + self.target_len <= self.tokens.len()
    }
}

/// A labelled dataset tagged with its split of origin.
#[derive(Debug, Clone, PartialEq)]
pub struct AtscDataset {
    pub split: Split,
    pub examples: Vec<AtscExample>,
}

impl AtscDataset {
    pub fn new(split: Split, examples: Vec<AtscExample>) -> Self {
        AtscDataset { split, examples }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Concatenation of several datasets of the same split.
    pub fn concat(parts: &[&AtscDataset]) -> Option<AtscDataset> {
        let split = parts.first()?.split;
        if parts.iter().any(|p| p.split != split) {
            return None;
        }
        let examples = parts.iter().flat_map(|p| p.examples.iter().cloned()).collect();
        Some(AtscDataset { split, examples })
    }
}
