//! Input reduction: greedily delete the least important word (the one whose
//! removal costs the predicted class the least probability) until the
//! prediction flips. Aspect-target tokens are never removed.

use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::nn::{classify_atsc, predict, EncoderModel};
use crate::text::{AtscExample, Domain, Polarity, Vocab};
use crate::training::encode_atsc_input;

#[derive(Debug, Error)]
pub enum InterpretError {
    #[error("token {0} is part of the aspect target")]
    IndexInTarget(usize),
    #[error("token index {index} out of range for {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("target span {0:?} outside the sentence")]
    BadTarget(Range<usize>),
    #[error("model evaluation failed: {0}")]
    Model(String),
}

/// Anything that maps (tokens, target span) to class probabilities in
/// (positive, negative, neutral) order.
pub trait SentimentModel: Sync {
    fn probs(&self, tokens: &[String], target: Range<usize>) -> Result<[f64; 3], InterpretError>;
}

/// An encoder checkpoint used as a [`SentimentModel`].
pub struct EncoderSentiment<'a> {
    pub model: &'a EncoderModel,
    pub vocab: &'a Vocab,
    pub max_len: usize,
}

impl SentimentModel for EncoderSentiment<'_> {
    fn probs(&self, tokens: &[String], target: Range<usize>) -> Result<[f64; 3], InterpretError> {
        let ex = AtscExample {
            tokens: tokens.to_vec(),
            target_start: target.start,
            target_len: target.len(),
            label: Polarity::Neutral,
            domain: Domain::Laptops,
        };
        let (ids, segs) = encode_atsc_input(&ex, self.vocab, self.max_len).map_err(|e| InterpretError::Model(e.to_string()))?;
        let mask = vec![true; ids.len()];
        let out = self.model.forward(&ids, &segs, &mask).map_err(|e| InterpretError::Model(e.to_string()))?;
        Ok(classify_atsc(self.model, &out))
    }
}

fn without(tokens: &[String], target: &Range<usize>, i: usize) -> (Vec<String>, Range<usize>) {
    let mut t = tokens.to_vec();
    t.remove(i);
    let r = if i < target.start { target.start - 1..target.end - 1 } else { target.clone() };
    (t, r)
}

fn check_target(tokens: &[String], target: &Range<usize>) -> Result<(), InterpretError> {
    if target.start > target.end || target.end > tokens.len() {
        return Err(InterpretError::BadTarget(target.clone()));
    }
    Ok(())
}

/// `g(x_i) = p(y|x) − p(y|x without token i)`, with `y` the prediction on the
/// full input.
pub fn importance(model: &dyn SentimentModel, tokens: &[String], target: Range<usize>, i: usize) -> Result<f64, InterpretError> {
    check_target(tokens, &target)?;
    if i >= tokens.len() {
        return Err(InterpretError::IndexOutOfRange { index: i, len: tokens.len() });
    }
    if target.contains(&i) {
        return Err(InterpretError::IndexInTarget(i));
    }
    let full = model.probs(tokens, target.clone())?;
    let y = predict(&full).index();
    let (t, r) = without(tokens, &target, i);
    Ok(full[y] - model.probs(&t, r)?[y])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    /// Index into the original token list.
    pub removed: usize,
    pub importance: f64,
    /// p(y | surviving tokens) after the removal.
    pub prob_after: f64,
    pub label_after: Polarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub tokens: Vec<String>,
    pub target_start: usize,
    pub target_len: usize,
    pub label: Polarity,
    pub prob: f64,
    pub steps: Vec<ReductionStep>,
    /// Original indices surviving one iteration before the flip (everything
    /// left at termination when the label never flips).
    pub reduced_set: Vec<usize>,
    pub flipped_label: Option<Polarity>,
    /// Max class probability on the full input was below 0.5.
    pub low_confidence: bool,
}

impl ReductionTrace {
    pub fn target_range(&self) -> Range<usize> {
        self.target_start..self.target_start + self.target_len
    }

    pub fn reduced_tokens(&self) -> Vec<&str> {
        self.reduced_set.iter().map(|&i| self.tokens[i].as_str()).collect()
    }

    /// Sentence, marker line (`^` reduced set, `=` target), and a step table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let target = self.target_range();
        let _ = writeln!(s, "sentence: {}", self.tokens.join(" "));
        let _ = writeln!(s, "target:   {}", self.tokens[target.clone()].join(" "));
        let mut words = String::new();
        let mut marks = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                words.push(' ');
                marks.push(' ');
            }
            words.push_str(t);
            let m = if target.contains(&i) {
                '='
            } else if self.reduced_set.contains(&i) {
                '^'
            } else {
                ' '
            };
            marks.extend(std::iter::repeat_n(m, t.chars().count()));
        }
        let _ = writeln!(s, "reduced:  {words}");
        let _ = writeln!(s, "          {}", marks.trim_end());
        let _ = writeln!(
            s,
            "label: {} p={:.4}{}",
            self.label,
            self.prob,
            if self.low_confidence { " (low confidence)" } else { "" }
        );
        let _ = writeln!(s, "step\tremoved\tword\timportance\tp_after\tlabel_after");
        for (k, st) in self.steps.iter().enumerate() {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{:.6}\t{:.6}\t{}",
                k + 1,
                st.removed,
                self.tokens[st.removed],
                st.importance,
                st.prob_after,
                st.label_after
            );
        }
        match self.flipped_label {
            Some(l) => {
                let _ = writeln!(s, "flipped to: {l}");
            }
            None => s.push_str("flipped to: none\n"),
        }
        s
    }
}

/// Greedy input reduction. Importance is recomputed over the surviving
/// tokens at every iteration; ties go to the leftmost token.
pub fn reduce_input(model: &dyn SentimentModel, tokens: &[String], target: Range<usize>) -> Result<ReductionTrace, InterpretError> {
    check_target(tokens, &target)?;
    let full = model.probs(tokens, target.clone())?;
    let label = predict(&full);
    let y = label.index();
    let mut alive: Vec<usize> = (0..tokens.len()).collect();
    let mut steps = Vec::new();
    let mut flipped_label = None;
    let mut reduced_set = alive.clone();
    let mut p_cur = full[y];

    let context = |alive: &[usize]| -> (Vec<String>, Range<usize>) {
        let toks = alive.iter().map(|&i| tokens[i].clone()).collect();
        let start = alive.iter().position(|&i| i == target.start).unwrap_or(0);
        (toks, start..start + target.len())
    };

    loop {
        let (ctx, ctx_target) = context(&alive);
        let mut best: Option<(usize, f64, [f64; 3])> = None;
        for pos in 0..alive.len() {
            if ctx_target.contains(&pos) {
                continue;
            }
            let (t, r) = without(&ctx, &ctx_target, pos);
            let p = model.probs(&t, r)?;
            let g = p_cur - p[y];
            if best.is_none_or(|b| g < b.1) {
                best = Some((pos, g, p));
            }
        }
        let Some((pos, g, p)) = best else {
            reduced_set = alive.clone();
            break;
        };
        let removed = alive.remove(pos);
        let label_after = predict(&p);
        steps.push(ReductionStep { removed, importance: g, prob_after: p[y], label_after });
        if label_after != label {
            flipped_label = Some(label_after);
            break;
        }
        reduced_set = alive.clone();
        p_cur = p[y];
    }

    Ok(ReductionTrace {
        tokens: tokens.to_vec(),
        target_start: target.start,
        target_len: target.len(),
        label,
        prob: full[y],
        steps,
        reduced_set,
        flipped_label,
        low_confidence: full.iter().cloned().fold(0.0, f64::max) < 0.5,
    })
}

/// Reduce several inputs against one immutable model.
pub fn reduce_many(
    model: &dyn SentimentModel,
    inputs: &[(Vec<String>, Range<usize>)],
    exec: Exec,
) -> Vec<Result<ReductionTrace, InterpretError>> {
    exec.map(inputs, |(t, r)| reduce_input(model, t, r.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    /// Positive iff "good" is present.
    struct GoodStub;

    impl SentimentModel for GoodStub {
        fn probs(&self, tokens: &[String], _: Range<usize>) -> Result<[f64; 3], InterpretError> {
            Ok(if tokens.iter().any(|t| t == "good") { [0.9, 0.05, 0.05] } else { [0.2, 0.6, 0.2] })
        }
    }

    #[test]
    fn good_food_example() {
        let t = toks("the food is good");
        let tr = reduce_input(&GoodStub, &t, 1..2).unwrap();
        let removed: Vec<usize> = tr.steps.iter().map(|s| s.removed).collect();
        assert_eq!(removed, [0, 2, 3]);
        assert_eq!(tr.reduced_tokens(), ["food", "good"]);
        assert_eq!(tr.flipped_label, Some(Polarity::Negative));
        assert!((tr.steps[2].importance - 0.7).abs() < 1e-12);
        let text = tr.to_text();
        assert!(text.contains("     ====    ^^^^"), "{text}");
    }

    #[test]
    fn importance_examples_and_errors() {
        let t = toks("the food is good");
        assert_eq!(importance(&GoodStub, &t, 1..2, 0).unwrap(), 0.0);
        assert!((importance(&GoodStub, &t, 1..2, 3).unwrap() - 0.7).abs() < 1e-12);
        assert!(matches!(importance(&GoodStub, &t, 1..2, 1), Err(InterpretError::IndexInTarget(1))));
        assert!(matches!(importance(&GoodStub, &t, 1..2, 9), Err(InterpretError::IndexOutOfRange { .. })));
    }

    #[test]
    fn target_only_sentence_has_no_steps() {
        let t = toks("battery life");
        let tr = reduce_input(&GoodStub, &t, 0..2).unwrap();
        assert!(tr.steps.is_empty());
        assert_eq!(tr.reduced_set, [0, 1]);
        assert_eq!(tr.flipped_label, None);
    }

    #[test]
    fn no_flip_keeps_target_only() {
        let t = toks("good food is good");
        let tr = reduce_input(&GoodStub, &t, 3..4).unwrap();
        assert_eq!(tr.flipped_label, None);
        assert_eq!(tr.reduced_set, [3]);
        assert_eq!(tr.steps.len(), 3);
        let json = serde_json::to_string(&tr).unwrap();
        assert_eq!(serde_json::from_str::<ReductionTrace>(&json).unwrap(), tr);
    }
}
