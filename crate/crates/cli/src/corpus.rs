use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use absa_lab::lmdata::{shard_stats, MaskingPolicy, Shard};
use absa_lab::seed;
use absa_lab::text::{normalize_sentence, prepare_corpus, read_reviews, Domain, Split, Vocab};
use absa_lab::Exec;

use crate::common::{load_vocab, load_xml, start_run};
use crate::config::{existing, merge, required, usage};

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepareCorpusArgs {
    /// TOML file with any of the options below.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Overwrite a completed run directory.
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    /// Reviews, one JSON object per line: {"text": ..., "id": ...}.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub domain: Option<Domain>,
    /// SemEval XML files whose sentences must not leak into the corpus.
    #[arg(long, value_delimiter = ',')]
    pub eval_xml: Option<Vec<PathBuf>>,
    /// Sample whole reviews until at least this many sentences are kept.
    #[arg(long)]
    pub sentences: Option<usize>,
    /// Existing vocabulary; built from the corpus when absent.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub max_vocab: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Independently masked copies of the data (one per LM epoch, cycled).
    #[arg(long)]
    pub shards: Option<usize>,
    /// select/mask/random/keep, e.g. 0.15/0.8/0.1/0.1.
    #[arg(long)]
    pub masking: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl PrepareCorpusArgs {
    fn resolve(mut self) -> Self {
        self.max_vocab.get_or_insert(8_192);
        self.max_len.get_or_insert(256);
        self.shards.get_or_insert(1);
        self.masking.get_or_insert_with(|| MaskingPolicy::default().to_header());
        self.seed.get_or_insert(0);
        self.eval_xml.get_or_insert_with(Vec::new);
        self
    }
}

pub fn run(flags: PrepareCorpusArgs, exec: Exec) -> Result<()> {
    let a = merge(&flags, flags.config.as_deref())?.resolve();
    let input = existing(&a.input, "input")?;
    let domain = required(&a.domain, "domain")?;
    let policy = MaskingPolicy::from_header(a.masking.as_deref().unwrap_or_default())
        .filter(|p| p.validate().is_ok())
        .ok_or_else(|| usage(format!("invalid --masking {:?}", a.masking)))?;
    let eval_files = a.eval_xml.clone().unwrap_or_default();
    let vocab_file = match &a.vocab {
        Some(_) => Some(existing(&a.vocab, "vocab")?),
        None => None,
    };
    let seed = a.seed.unwrap_or_default();
    let max_len = a.max_len.unwrap_or(256);
    let rd = start_run(&a.out, flags.force, &a)?;

    let reviews = read_reviews(&input).with_context(|| format!("reading {}", input.display()))?;
    let mut eval_tokens = Vec::new();
    for f in &eval_files {
        eval_tokens.extend(load_xml(f, domain, Split::Test)?.into_iter().map(|e| e.tokens));
    }
    let eval: HashSet<String> = eval_tokens.iter().map(|t| normalize_sentence(&t.join(" "))).collect();
    let sample_seed = seed::derive(seed, "sample");
    let (docs, manifest) = prepare_corpus(&reviews, domain, &eval, a.sentences, sample_seed, exec)?;

    let vocab = match &vocab_file {
        Some(p) => load_vocab(p)?,
        None => Vocab::build(
            docs.iter().flat_map(|d| d.sentences.iter().map(Vec::as_slice)).chain(eval_tokens.iter().map(Vec::as_slice)),
            a.max_vocab.unwrap_or(8_192),
        ),
    };
    vocab.save(&rd.join("vocab.txt"))?;

    let shard_dir = rd.join("shards");
    std::fs::create_dir_all(&shard_dir)?;
    let mut shard_lines = String::new();
    for k in 0..a.shards.unwrap_or(1) {
        let shard = Shard::build(&docs, &vocab, &policy, max_len, seed::derive(seed, &format!("shard-{k}")), exec)?;
        let name = format!("shard-{k:03}");
        shard.save(&shard_dir.join(format!("{name}.bin")))?;
        let stats = shard_stats(&shard.examples);
        std::fs::write(shard_dir.join(format!("{name}.stats")), format!("seed = {}\n{stats}", shard.header.seed))?;
        let _ = writeln!(shard_lines, "{name} = {} records", shard.examples.len());
    }

    let mut m = format!("seed = {seed}\ndomain = {domain}\n{manifest}");
    let _ = writeln!(m, "vocab_size = {}\nvocab_hash = {}", vocab.len(), vocab.hash());
    m.push_str(&shard_lines);
    std::fs::write(rd.join("manifest.txt"), &m)?;
    rd.write_summary(&[("command", "prepare-corpus".into()), ("seed", seed.to_string()), ("sentence_count", manifest.sentence_count.to_string())])?;
    print!("{m}");
    Ok(())
}
