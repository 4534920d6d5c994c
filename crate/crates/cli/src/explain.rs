use std::ops::Range;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use absa_lab::interpret::{reduce_many, EncoderSentiment, InterpretError, SentimentModel};
use absa_lab::text::{split_words, Domain, Split};
use absa_lab::Exec;

use crate::common::{dataset_from, load_checkpoint, load_vocab, start_run};
use crate::config::{existing, merge, usage};

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trained ATSC checkpoint.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Use a small sentiment-lexicon model instead of a checkpoint.
    #[arg(long, num_args = 0, default_missing_value = "true")]
    pub stub: Option<bool>,
    #[arg(long)]
    pub sentence: Option<String>,
    /// Aspect target; must occur in the sentence.
    #[arg(long)]
    pub target: Option<String>,
    /// SemEval XML file: explain every aspect term in it.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub domain: Option<Domain>,
    #[arg(long)]
    pub max_len: Option<usize>,
}

const STUB_POSITIVE: &[&str] = &["good", "great", "love", "excellent", "delicious", "nice", "best", "fast", "friendly", "tasty"];
const STUB_NEGATIVE: &[&str] = &["bad", "awful", "terrible", "poor", "slow", "worst", "rude", "bland", "broken", "horrible"];

/// Softmax over (#positive words, #negative words, 0.5).
struct LexiconStub;

impl SentimentModel for LexiconStub {
    fn probs(&self, tokens: &[String], _: Range<usize>) -> Result<[f64; 3], InterpretError> {
        let count = |lex: &[&str]| tokens.iter().filter(|t| lex.contains(&t.as_str())).count() as f64;
        let z = [count(STUB_POSITIVE), count(STUB_NEGATIVE), 0.5];
        let m = z.iter().cloned().fold(f64::MIN, f64::max);
        let e = z.map(|x| (x - m).exp());
        let s: f64 = e.iter().sum();
        Ok(e.map(|x| x / s))
    }
}

fn locate(tokens: &[String], target: &[String]) -> Option<Range<usize>> {
    if target.is_empty() || target.len() > tokens.len() {
        return None;
    }
    (0..=tokens.len() - target.len()).find(|&i| tokens[i..i + target.len()] == *target).map(|i| i..i + target.len())
}

fn words(s: &str) -> Vec<String> {
    split_words(s).into_iter().map(|w| w.text).collect()
}

pub fn run(flags: ExplainArgs, exec: Exec) -> Result<()> {
    let mut a = merge(&flags, flags.config.as_deref())?;
    a.stub.get_or_insert(false);
    let inputs: Vec<(Vec<String>, Range<usize>)> = match (&a.input, &a.sentence) {
        (Some(_), _) => {
            let p = existing(&a.input, "input")?;
            let ds = dataset_from(&[p], a.domain.or(Some(Domain::Restaurants)), Split::Test)?;
            ds.examples.into_iter().map(|e| (e.tokens.clone(), e.target_range())).collect()
        }
        (None, Some(s)) => {
            let tokens = words(s);
            let target = words(a.target.as_deref().ok_or_else(|| usage("missing --target"))?);
            let r = locate(&tokens, &target)
                .ok_or_else(|| usage(format!("target {:?} does not occur in the sentence", a.target.clone().unwrap_or_default())))?;
            vec![(tokens, r)]
        }
        (None, None) => return Err(usage("pass --sentence and --target, or --input")),
    };
    let loaded = if a.stub == Some(true) {
        None
    } else {
        let ck = load_checkpoint(&existing(&a.model, "model")?)?;
        let vocab = load_vocab(&existing(&a.vocab, "vocab")?)?;
        Some((ck, vocab))
    };
    let rd = start_run(&a.out, flags.force, &a)?;
    let traces = match &loaded {
        None => reduce_many(&LexiconStub, &inputs, exec),
        Some((ck, vocab)) => {
            let max_len = a.max_len.unwrap_or(ck.model.config.max_len);
            let m = EncoderSentiment { model: &ck.model, vocab, max_len };
            reduce_many(&m, &inputs, exec)
        }
    };
    let mut jsonl = String::new();
    let mut text = String::new();
    for t in traces {
        let t = t?;
        jsonl.push_str(&serde_json::to_string(&t)?);
        jsonl.push('\n');
        text.push_str(&t.to_text());
        text.push('\n');
    }
    std::fs::write(rd.join("traces.jsonl"), &jsonl)?;
    std::fs::write(rd.join("traces.txt"), &text)?;
    rd.write_summary(&[("command", "explain".into()), ("examples", inputs.len().to_string())])?;
    print!("{text}");
    Ok(())
}
