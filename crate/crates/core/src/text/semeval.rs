use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{split_words, AtscExample, Domain, Polarity, Split, TextError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub positive: usize,
    pub negative: usize,
    pub neutral: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.positive + self.negative + self.neutral
    }

    pub fn add(&mut self, p: Polarity) {
        match p {
            Polarity::Positive => self.positive += 1,
            Polarity::Negative => self.negative += 1,
            Polarity::Neutral => self.neutral += 1,
        }
    }

    pub fn of(examples: &[AtscExample]) -> ClassCounts {
        let mut c = ClassCounts::default();
        examples.iter().for_each(|e| c.add(e.label));
        c
    }
}

/// Per-split, per-class label counts plus the number of conflict terms dropped.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub train: ClassCounts,
    pub test: ClassCounts,
    pub conflict_dropped: usize,
}

impl LabelCounts {
    pub fn split_mut(&mut self, split: Split) -> &mut ClassCounts {
        match split {
            Split::Train => &mut self.train,
            Split::Test => &mut self.test,
        }
    }

    pub fn merge(&self, other: &LabelCounts) -> LabelCounts {
        let add = |a: ClassCounts, b: ClassCounts| ClassCounts {
            positive: a.positive + b.positive,
            negative: a.negative + b.negative,
            neutral: a.neutral + b.neutral,
        };
        LabelCounts {
            train: add(self.train, other.train),
            test: add(self.test, other.test),
            conflict_dropped: self.conflict_dropped + other.conflict_dropped,
        }
    }
}

impl fmt::Display for LabelCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "split\tpositive\tnegative\tneutral")?;
        for (name, c) in [("train", self.train), ("test", self.test)] {
            writeln!(f, "{name}\t{}\t{}\t{}", c.positive, c.negative, c.neutral)?;
        }
        writeln!(f, "conflict_dropped\t{}", self.conflict_dropped)
    }
}

pub fn parse_semeval_xml(
    path: &Path,
    domain: Domain,
    split: Split,
) -> Result<(Vec<AtscExample>, LabelCounts), TextError> {
    parse_semeval_str(&fs::read_to_string(path)?, domain, split)
}

/// Parse SemEval 2014 Task 4 (subtask 2) XML: `<sentence>` elements with a
/// `<text>` child and `<aspectTerm term polarity from to>` descendants.
/// Conflict terms are dropped and counted.
pub fn parse_semeval_str(
    xml: &str,
    domain: Domain,
    split: Split,
) -> Result<(Vec<AtscExample>, LabelCounts), TextError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| TextError::MalformedXml(e.to_string()))?;
    let mut examples = Vec::new();
    let mut counts = LabelCounts::default();
    for sentence in doc.descendants().filter(|n| n.has_tag_name("sentence")) {
        let text = sentence
            .children()
            .find(|n| n.has_tag_name("text"))
            .and_then(|n| n.text())
            .ok_or_else(|| TextError::MalformedXml("sentence without <text>".into()))?;
        let words = split_words(text);
        let tokens: Vec<String> = words.iter().map(|w| w.text.clone()).collect();
        for term in sentence.descendants().filter(|n| n.has_tag_name("aspectTerm")) {
            let attr = |name: &str| {
                term.attribute(name)
                    .ok_or_else(|| TextError::MalformedXml(format!("aspectTerm without {name}")))
            };
            let polarity = attr("polarity")?;
            if polarity.eq_ignore_ascii_case("conflict") {
                counts.conflict_dropped += 1;
                continue;
            }
            let label: Polarity = polarity.parse().map_err(TextError::MalformedXml)?;
            let parse_off = |name: &str| -> Result<usize, TextError> {
                attr(name)?.trim().parse().map_err(|_| TextError::MalformedXml(format!("bad {name} offset")))
            };
            let (from, to) = (parse_off("from")?, parse_off("to")?);
            let out_of_range = || TextError::OffsetOutOfRange { sentence: text.to_string(), from, to };
            if from >= to || to > text.chars().count() {
                return Err(out_of_range());
            }
            // Minimal token span covering [from, to).
            let hit: Vec<usize> =
                words.iter().enumerate().filter(|(_, w)| w.start < to && w.end > from).map(|(i, _)| i).collect();
            let (first, last) = match (hit.first(), hit.last()) {
                (Some(&a), Some(&b)) => (a, b),
                _ => return Err(out_of_range()),
            };
            counts.split_mut(split).add(label);
            examples.push(AtscExample {
                tokens: tokens.clone(),
                target_start: first,
                target_len: last - first + 1,
                label,
                domain,
            });
        }
    }
    Ok((examples, counts))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Inverse of the parser for space-joined token sentences: one `<sentence>`
/// per distinct token list, with character offsets of each target.
pub fn write_semeval_xml(examples: &[AtscExample]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n<sentences>\n");
    let mut i = 0;
    let mut id = 0;
    while i < examples.len() {
        let tokens = &examples[i].tokens;
        let mut j = i;
        while j < examples.len() && &examples[j].tokens == tokens {
            j += 1;
        }
        let text = tokens.join(" ");
        let starts: Vec<usize> = tokens
            .iter()
            .scan(0usize, |pos, t| {
                let s = *pos;
                *pos += t.chars().count() + 1;
                Some(s)
            })
            .collect();
        out.push_str(&format!("    <sentence id=\"{id}\">\n        <text>{}</text>\n        <aspectTerms>\n", escape(&text)));
        for e in &examples[i..j] {
            let from = starts[e.target_start];
            let last = e.target_start + e.target_len - 1;
            let to = starts[last] + tokens[last].chars().count();
            out.push_str(&format!(
                "            <aspectTerm term=\"{}\" polarity=\"{}\" from=\"{from}\" to=\"{to}\"/>\n",
                escape(&e.target().join(" ")),
                e.label
            ));
        }
        out.push_str("        </aspectTerms>\n    </sentence>\n");
        id += 1;
        i = j;
    }
    out.push_str("</sentences>\n");
    out
}
