use super::Vocab;

/// A lowercased word with the character span `[start, end)` it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSpan {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace() && !c.is_ascii())
}

/// Lowercase whitespace tokenization with every punctuation character split
/// off as its own token. Offsets are in characters of the original text.
pub fn split_words(text: &str) -> Vec<WordSpan> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut cur_start = 0;
    let flush = |cur: &mut String, start: usize, end: usize, out: &mut Vec<WordSpan>| {
        if !cur.is_empty() {
            out.push(WordSpan { text: std::mem::take(cur), start, end });
        }
    };
    let mut n = 0;
    for (i, c) in text.chars().enumerate() {
        n = i + 1;
        if c.is_whitespace() {
            flush(&mut cur, cur_start, i, &mut out);
        } else if is_punct(c) {
            flush(&mut cur, cur_start, i, &mut out);
            out.push(WordSpan { text: c.to_lowercase().collect(), start: i, end: i + 1 });
        } else {
            if cur.is_empty() {
                cur_start = i;
            }
            cur.extend(c.to_lowercase());
        }
    }
    flush(&mut cur, cur_start, n, &mut out);
    out
}

/// Tokenize and map to ids; out-of-vocabulary words become `[UNK]`.
pub fn tokenize(text: &str, vocab: &Vocab) -> Vec<u32> {
    split_words(text).iter().map(|w| vocab.id(&w.text)).collect()
}
