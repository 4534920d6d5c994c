/// Words ending in a period that never terminate a sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "vs.", "etc.", "e.g.", "i.e.",
    "approx.", "inc.", "ltd.", "co.", "no.", "fig.",
];

const TERMINAL: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201d}', '\u{2019}'];
const OPENERS: &[char] = &['"', '\'', '(', '[', '\u{201c}', '\u{2018}'];

/// Split on runs of `.`, `!` or `?` (plus closing quotes/brackets) that are
/// followed by whitespace or the end of the text. A lone period ending a word
/// from [`ABBREVIATIONS`] does not split. Pieces are whitespace-trimmed.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < n {
        if !TERMINAL.contains(&chars[i]) {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < n && TERMINAL.contains(&chars[j]) {
            j += 1;
        }
        let run_len = j - i;
        while j < n && CLOSERS.contains(&chars[j]) {
            j += 1;
        }
        let at_boundary = j == n || chars[j].is_whitespace();
        if at_boundary && !(run_len == 1 && chars[i] == '.' && is_abbreviation(&chars, i)) {
            push_trimmed(&chars[start..j], &mut out);
            start = j;
        }
        i = j;
    }
    push_trimmed(&chars[start..], &mut out);
    out
}

fn is_abbreviation(chars: &[char], dot: usize) -> bool {
    let mut k = dot;
    while k > 0 && !chars[k - 1].is_whitespace() {
        k -= 1;
    }
    let word: String = chars[k..=dot]
        .iter()
        .skip_while(|c| OPENERS.contains(c))
        .flat_map(|c| c.to_lowercase())
        .collect();
    ABBREVIATIONS.contains(&word.as_str())
}

fn push_trimmed(piece: &[char], out: &mut Vec<String>) {
    let s: String = piece.iter().collect();
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}
