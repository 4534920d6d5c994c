//! Two synthetic review domains for desk-scale experiments.
//!
//! Both domains share function words and a small generic sentiment lexicon
//! ("good", "awful", ...). Each domain also has its own aspect nouns and its
//! own sentiment adjectives, disjoint from the other domain's. The generic
//! base corpus never uses any domain word.
//!
//! Labeled training sentences mix generic and domain adjectives; labeled test
//! sentences use domain adjectives only. A classifier trained on one domain
//! therefore has never seen the other domain's sentiment words, unless LM
//! finetuning on that domain's unlabeled reviews (where both kinds of
//! adjectives co-occur within a review) has placed them next to the generic
//! ones.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::exec::Exec;
use crate::lmdata::{MaskingPolicy, Shard};
use crate::nn::{AdamConfig, Checkpoint, EncoderConfig, EncoderModel, Precision};
use crate::seed::{self, Rng};
use crate::text::{
    normalize_sentence, prepare_corpus, write_semeval_xml, AtscDataset, AtscExample, ClassCounts, Domain, DomainSet,
    Polarity, RawReview, Split, Vocab,
};
use crate::training::{
    evaluate_accuracy, lm_finetune, train_atsc, AtscRunSpec, FinetuneOutcome, FinetuneRunSpec, TrainError,
};

const FUNCTION_WORDS: &[&str] = &[
    "the", "a", "is", "was", "really", "very", "quite", "i", "we", "my", "friend", "think", "found", "overall", "yesterday",
    "last", "week", "and", ".",
];
const GENERIC_POS: &[&str] = &["good", "great", "excellent", "nice", "wonderful"];
const GENERIC_NEG: &[&str] = &["bad", "awful", "poor", "terrible", "horrible"];
const GENERIC_NOUNS: &[&str] = &["thing", "product", "experience", "purchase", "item", "deal"];
const GENERIC_VERBS: &[&str] = &["bought", "saw", "got", "checked"];

struct Lexicon {
    aspects: &'static [&'static str],
    pos: &'static [&'static str],
    neg: &'static [&'static str],
    verbs: &'static [&'static str],
}

fn lexicon(d: Domain) -> Lexicon {
    match d {
        Domain::Laptops => Lexicon {
            aspects: &["screen", "battery", "keyboard", "processor", "trackpad", "speakers", "charger", "memory"],
            pos: &["fast", "sleek", "responsive", "crisp", "snappy"],
            neg: &["laggy", "flimsy", "sluggish", "glitchy", "noisy"],
            verbs: &["used", "tested", "installed", "replaced"],
        },
        Domain::Restaurants => Lexicon {
            aspects: &["food", "service", "pasta", "waiter", "dessert", "pizza", "staff", "wine"],
            pos: &["tasty", "delicious", "fresh", "flavorful", "juicy"],
            neg: &["bland", "stale", "soggy", "greasy", "cold"],
            verbs: &["ordered", "tried", "shared", "sampled"],
        },
    }
}

/// Domain-specific sentiment adjectives.
pub fn domain_sentiment_words(d: Domain) -> Vec<&'static str> {
    let l = lexicon(d);
    l.pos.iter().chain(l.neg).copied().collect()
}

/// Every word the generator can emit, in a fixed order.
pub fn synth_vocab() -> Vocab {
    let mut words: Vec<&str> = Vec::new();
    words.extend(FUNCTION_WORDS);
    words.extend(GENERIC_POS);
    words.extend(GENERIC_NEG);
    words.extend(GENERIC_NOUNS);
    words.extend(GENERIC_VERBS);
    for d in Domain::ALL {
        let l = lexicon(d);
        words.extend(l.aspects);
        words.extend(l.pos);
        words.extend(l.neg);
        words.extend(l.verbs);
    }
    Vocab::from_words(words)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub reviews_per_domain: usize,
    pub generic_reviews: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub train_examples: usize,
    pub test_examples: usize,
    /// Share of labeled training sentences using a generic adjective.
    pub train_generic_rate: f64,
    /// Share of unlabeled review sentences using a generic adjective.
    pub review_generic_rate: f64,
    /// Share of unlabeled review sentences with no sentiment word.
    pub review_neutral_rate: f64,
    /// Share of sentiment sentences in unlabeled reviews that pair two
    /// adjectives ("the screen is great and sleek").
    pub review_pair_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            reviews_per_domain: 400,
            generic_reviews: 400,
            min_sentences: 4,
            max_sentences: 6,
            train_examples: 300,
            test_examples: 150,
            train_generic_rate: 0.5,
            review_generic_rate: 0.5,
            review_neutral_rate: 0.2,
            review_pair_rate: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDomain {
    pub reviews: Vec<RawReview>,
    pub train: AtscDataset,
    pub test: AtscDataset,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub generic_reviews: Vec<RawReview>,
    pub domains: BTreeMap<Domain, SynthDomain>,
}

fn pick<'a>(rng: &mut Rng, xs: &[&'a str]) -> &'a str {
    xs[rng.gen_range(0..xs.len())]
}

/// One sentence as tokens plus the index of its aspect noun.
fn sentence(rng: &mut Rng, noun: &str, adj: Option<&str>, verbs: &[&str]) -> (Vec<String>, usize) {
    let t: Vec<&str> = match adj {
        Some(a) => match rng.gen_range(0..5) {
            0 => vec!["the", noun, "is", a, "."],
            1 => vec!["the", noun, "was", "really", a, "."],
            2 => vec!["i", "think", "the", noun, "is", "very", a, "."],
            3 => vec!["overall", "the", noun, "was", a, "."],
            _ => vec!["we", "found", "the", noun, "quite", a, "."],
        },
        None => {
            let v = pick(rng, verbs);
            match rng.gen_range(0..3) {
                0 => vec!["i", v, "the", noun, "yesterday", "."],
                1 => vec!["we", v, "the", noun, "last", "week", "."],
                _ => vec!["my", "friend", v, "the", noun, "."],
            }
        }
    };
    let at = t.iter().position(|w| *w == noun).unwrap_or(0);
    (t.into_iter().map(String::from).collect(), at)
}

fn review(rng: &mut Rng, cfg: &SynthConfig, lex: Option<&Lexicon>) -> String {
    let positive = rng.gen_bool(0.5);
    let n = rng.gen_range(cfg.min_sentences..=cfg.max_sentences);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (nouns, verbs) = match lex {
            Some(l) => (l.aspects, l.verbs),
            None => (GENERIC_NOUNS, GENERIC_VERBS),
        };
        let noun = pick(rng, nouns);
        if !rng.gen_bool(cfg.review_neutral_rate) && rng.gen_bool(cfg.review_pair_rate) {
            let generic = pick(rng, if positive { GENERIC_POS } else { GENERIC_NEG });
            let other = match lex {
                Some(l) => pick(rng, if positive { l.pos } else { l.neg }),
                None => pick(rng, if positive { GENERIC_POS } else { GENERIC_NEG }),
            };
            let (a, b) = if rng.gen_bool(0.5) { (generic, other) } else { (other, generic) };
            out.push(format!("the {noun} is {a} and {b} ."));
            continue;
        }
        let adj = if rng.gen_bool(cfg.review_neutral_rate) {
            None
        } else {
            let generic = if positive { GENERIC_POS } else { GENERIC_NEG };
            Some(match lex {
                Some(l) if !rng.gen_bool(cfg.review_generic_rate) => pick(rng, if positive { l.pos } else { l.neg }),
                _ => pick(rng, generic),
            })
        };
        out.push(sentence(rng, noun, adj, verbs).0.join(" "));
    }
    out.join(" ")
}

fn labeled(rng: &mut Rng, d: Domain, n: usize, generic_rate: f64) -> Vec<AtscExample> {
    let lex = lexicon(d);
    (0..n)
        .map(|i| {
            let label = Polarity::from_index(i % 3).unwrap_or(Polarity::Neutral);
            let adj = match label {
                Polarity::Neutral => None,
                p => {
                    let pos = p == Polarity::Positive;
                    Some(if rng.gen_bool(generic_rate) {
                        pick(rng, if pos { GENERIC_POS } else { GENERIC_NEG })
                    } else {
                        pick(rng, if pos { lex.pos } else { lex.neg })
                    })
                }
            };
            let noun = pick(rng, lex.aspects);
            let (tokens, at) = sentence(rng, noun, adj, lex.verbs);
            AtscExample { tokens, target_start: at, target_len: 1, label, domain: d }
        })
        .collect()
}

/// Generate both domains and the generic corpus from `seed`.
pub fn generate(cfg: &SynthConfig, seed: u64) -> SynthData {
    let mut rng = seed::rng_for(seed, "synth:generic");
    let generic_reviews = (0..cfg.generic_reviews)
        .map(|i| RawReview { text: review(&mut rng, cfg, None), id: Some(format!("generic-{i}")) })
        .collect();
    let mut domains = BTreeMap::new();
    for d in Domain::ALL {
        let lex = lexicon(d);
        let mut rng = seed::rng_for(seed, &format!("synth:{d}:reviews"));
        let reviews = (0..cfg.reviews_per_domain)
            .map(|i| RawReview { text: review(&mut rng, cfg, Some(&lex)), id: Some(format!("{d}-{i}")) })
            .collect();
        let mut rng = seed::rng_for(seed, &format!("synth:{d}:train"));
        let mut train = labeled(&mut rng, d, cfg.train_examples, cfg.train_generic_rate);
        train.shuffle(&mut rng);
        let mut rng = seed::rng_for(seed, &format!("synth:{d}:test"));
        let mut test = labeled(&mut rng, d, cfg.test_examples, 0.0);
        test.shuffle(&mut rng);
        domains.insert(
            d,
            SynthDomain { reviews, train: AtscDataset::new(Split::Train, train), test: AtscDataset::new(Split::Test, test) },
        );
    }
    SynthData { generic_reviews, domains }
}

fn jsonl(reviews: &[RawReview]) -> String {
    reviews.iter().map(|r| serde_json::to_string(r).unwrap_or_default() + "\n").collect()
}

/// Write the generated data in the on-disk input formats:
/// `{domain}_{train,test}.xml`, `{domain}_reviews.jsonl`,
/// `generic_reviews.jsonl` and `manifest.tsv` with per-file label counts.
pub fn write_synth_data(data: &SynthData, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("generic_reviews.jsonl"), jsonl(&data.generic_reviews))?;
    let mut manifest = String::from("file\tpositive\tnegative\tneutral\n");
    for (d, sd) in &data.domains {
        std::fs::write(dir.join(format!("{d}_reviews.jsonl")), jsonl(&sd.reviews))?;
        for (name, ds) in [("train", &sd.train), ("test", &sd.test)] {
            let file = format!("{d}_{name}.xml");
            std::fs::write(dir.join(&file), write_semeval_xml(&ds.examples))?;
            let c = ClassCounts::of(&ds.examples);
            let _ = writeln!(manifest, "{file}\t{}\t{}\t{}", c.positive, c.negative, c.neutral);
        }
    }
    std::fs::write(dir.join("manifest.tsv"), manifest)
}

/// Settings of the LM-finetuning-before-cross-domain-training experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub synth: SynthConfig,
    pub model: EncoderConfig,
    pub source: Domain,
    pub target: Domain,
    /// Epochs of LM training on the generic corpus before anything else; 0
    /// starts from random weights.
    pub base_epochs: usize,
    pub lm_epochs: usize,
    pub lm_batch: usize,
    pub lm_lr: f64,
    pub lm_max_len: usize,
    pub atsc_epochs: usize,
    pub atsc_batch: usize,
    pub atsc_lr: f64,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let vocab = synth_vocab();
        ExperimentConfig {
            synth: SynthConfig::default(),
            model: EncoderConfig {
                num_layers: 2,
                hidden_dim: 32,
                num_heads: 2,
                ff_dim: 64,
                vocab_size: vocab.len(),
                max_len: 48,
                precision: Precision::Single,
                init_std: 0.1,
                ..EncoderConfig::default()
            },
            source: Domain::Restaurants,
            target: Domain::Laptops,
            base_epochs: 2,
            lm_epochs: 16,
            lm_batch: 16,
            lm_lr: 3e-3,
            lm_max_len: 48,
            atsc_epochs: 6,
            atsc_batch: 16,
            atsc_lr: 1e-3,
            seeds: (1..=9).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub baseline_accuracy: f64,
    pub adapted_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub runs: Vec<SeedOutcome>,
    pub seconds: f64,
}

impl ExperimentOutcome {
    /// Mean of adapted − baseline accuracy.
    pub fn mean_gain(&self) -> f64 {
        self.runs.iter().map(|r| r.adapted_accuracy - r.baseline_accuracy).sum::<f64>() / self.runs.len().max(1) as f64
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("seed\tbaseline_accuracy\tadapted_accuracy\tgain\n");
        for r in &self.runs {
            let _ = writeln!(
                s,
                "{}\t{:.6}\t{:.6}\t{:.6}",
                r.seed,
                r.baseline_accuracy,
                r.adapted_accuracy,
                r.adapted_accuracy - r.baseline_accuracy
            );
        }
        s
    }
}

/// LM training of `start` on `reviews` (full MLM + NSP pipeline).
#[allow(clippy::too_many_arguments)]
pub fn lm_train_on(
    start: &Checkpoint,
    reviews: &[RawReview],
    domain: DomainSet,
    vocab: &Vocab,
    eval_sentences: &HashSet<String>,
    epochs: usize,
    batch: usize,
    lr: f64,
    max_len: usize,
    seed: u64,
    exec: Exec,
) -> Result<FinetuneOutcome, TrainError> {
    let d = domain.single().unwrap_or(Domain::Laptops);
    let (docs, _) = prepare_corpus(reviews, d, eval_sentences, None, seed, exec)
        .map_err(|e| TrainError::InvalidSpec(e.to_string()))?;
    let policy = MaskingPolicy::default();
    let shards = (0..epochs.min(4))
        .map(|k| Shard::build(&docs, vocab, &policy, max_len, seed::derive(seed, &format!("shard-{k}")), exec))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = FinetuneRunSpec {
        batch_size: batch,
        adam: AdamConfig { lr, ..AdamConfig::default() },
        ..FinetuneRunSpec::new(domain, epochs, seed)
    };
    lm_finetune(start, &spec, &shards, exec)
}

/// Starting model shared by both arms of one seed.
pub fn base_model(cfg: &ExperimentConfig, data: &SynthData, vocab: &Vocab, seed: u64, exec: Exec) -> Result<Checkpoint, TrainError> {
    let model = EncoderModel::new(cfg.model.clone(), seed::derive(seed, "synth:init"))?;
    let mut ck = Checkpoint::new(model);
    ck.vocab_hash = Some(vocab.hash());
    if cfg.base_epochs == 0 {
        return Ok(ck);
    }
    lm_train_on(
        &ck,
        &data.generic_reviews,
        DomainSet::Joint,
        vocab,
        &HashSet::new(),
        cfg.base_epochs,
        cfg.lm_batch,
        cfg.lm_lr,
        cfg.lm_max_len,
        seed::derive(seed, "synth:base"),
        exec,
    )
    .map(|o| o.final_checkpoint)
}

fn atsc_spec(cfg: &ExperimentConfig, seed: u64) -> AtscRunSpec {
    AtscRunSpec {
        d_train: cfg.source.into(),
        epochs: cfg.atsc_epochs,
        batch_size: cfg.atsc_batch,
        adam: AdamConfig { lr: cfg.atsc_lr, ..AdamConfig::default() },
        seed: seed::derive(seed, "synth:atsc"),
        validation_fraction: 0.0,
        max_len: cfg.model.max_len,
    }
}

/// For each seed: base → ATSC(source) → accuracy on target test, against
/// base → LM finetuning on target reviews → ATSC(source) → accuracy on
/// target test. Both arms share data, base weights and classifier seed.
pub fn run_adaptation_experiment(cfg: &ExperimentConfig, exec: Exec) -> Result<ExperimentOutcome, TrainError> {
    let start = Instant::now();
    let vocab = synth_vocab();
    let runs = exec
        .map(&cfg.seeds, |&seed| -> Result<SeedOutcome, TrainError> {
            let data = generate(&cfg.synth, seed);
            let src = &data.domains[&cfg.source];
            let tgt = &data.domains[&cfg.target];
            let base = base_model(cfg, &data, &vocab, seed, Exec::Sequential)?;
            let spec = atsc_spec(cfg, seed);
            let baseline = train_atsc(&base.model, &spec, &src.train, &vocab, Exec::Sequential)?;
            let baseline_accuracy = evaluate_accuracy(&baseline.model, &tgt.test.examples, &vocab, spec.max_len, Exec::Sequential)?;
            let eval: HashSet<String> =
                tgt.test.examples.iter().map(|e| normalize_sentence(&e.tokens.join(" "))).collect();
            let adapted_lm = lm_train_on(
                &base,
                &tgt.reviews,
                cfg.target.into(),
                &vocab,
                &eval,
                cfg.lm_epochs,
                cfg.lm_batch,
                cfg.lm_lr,
                cfg.lm_max_len,
                seed::derive(seed, "synth:lm"),
                Exec::Sequential,
            )?
            .final_checkpoint;
            let adapted = train_atsc(&adapted_lm.model, &spec, &src.train, &vocab, Exec::Sequential)?;
            let adapted_accuracy = evaluate_accuracy(&adapted.model, &tgt.test.examples, &vocab, spec.max_len, Exec::Sequential)?;
            Ok(SeedOutcome { seed, baseline_accuracy, adapted_accuracy })
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentOutcome { runs, seconds: start.elapsed().as_secs_f64() })
}
