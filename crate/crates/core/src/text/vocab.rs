use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::TextError;
use crate::seed::sha256_hex;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";

const SPECIALS: [&str; 5] = [PAD, UNK, CLS, SEP, MASK];

/// Ids of the special tokens. `[PAD]` is always 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecialIds {
    pub pad: u32,
    pub unk: u32,
    pub cls: u32,
    pub sep: u32,
    pub mask: u32,
}

/// Word-level vocabulary. Ids are dense in `[0, len)`; the first five are the
/// special tokens in the order `[PAD] [UNK] [CLS] [SEP] [MASK]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub const NUM_SPECIAL: usize = SPECIALS.len();

    pub fn specials() -> SpecialIds {
        SpecialIds { pad: 0, unk: 1, cls: 2, sep: 3, mask: 4 }
    }

    /// Build from an explicit word list (specials are prepended, duplicates
    /// and specials in `words` are skipped).
    pub fn from_words<I, S>(words: I) -> Vocab
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        let mut index: HashMap<String, u32> =
            tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        for w in words {
            let w = w.as_ref();
            if w.is_empty() || index.contains_key(w) {
                continue;
            }
            index.insert(w.to_string(), tokens.len() as u32);
            tokens.push(w.to_string());
        }
        Vocab { tokens, index }
    }

    /// Most frequent tokens first, ties broken lexicographically, truncated so
    /// the vocabulary (specials included) holds at most `max_size` entries.
    pub fn from_counts(counts: &HashMap<String, u64>, max_size: usize) -> Vocab {
        let mut entries: Vec<(&String, &u64)> = counts.iter().collect();
        entries.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        let room = max_size.saturating_sub(Self::NUM_SPECIAL);
        Vocab::from_words(
            entries.into_iter().filter(|(w, _)| !SPECIALS.contains(&w.as_str())).take(room).map(|(w, _)| w),
        )
    }

    pub fn build<'a, I>(token_lists: I, max_size: usize) -> Vocab
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for list in token_lists {
            for t in list {
                *counts.entry(t.clone()).or_default() += 1;
            }
        }
        Vocab::from_counts(&counts, max_size)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Id of `token`, `[UNK]` when absent.
    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(Self::specials().unk)
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn is_special(&self, id: u32) -> bool {
        (id as usize) < Self::NUM_SPECIAL
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<&str> {
        ids.iter().map(|&i| self.token(i).unwrap_or(UNK)).collect()
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Short content hash used to tie shards and checkpoints to a vocabulary.
    pub fn hash(&self) -> String {
        let mut hex = sha256_hex(self.to_text().as_bytes());
        hex.truncate(16);
        hex
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.tokens {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    /// Parse the one-token-per-line format; the first five lines must be the
    /// special tokens.
    pub fn from_text(text: &str) -> Result<Vocab, TextError> {
        let lines: Vec<&str> = text.lines().collect();
        if lines.len() < Self::NUM_SPECIAL || lines[..Self::NUM_SPECIAL] != SPECIALS {
            return Err(TextError::BadVocab("missing special-token header".into()));
        }
        let vocab = Vocab::from_words(&lines[Self::NUM_SPECIAL..]);
        if vocab.len() != lines.len() {
            return Err(TextError::BadVocab("duplicate or empty entries".into()));
        }
        Ok(vocab)
    }

    pub fn save(&self, path: &Path) -> Result<(), TextError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vocab, TextError> {
        Vocab::from_text(&fs::read_to_string(path)?)
    }
}
