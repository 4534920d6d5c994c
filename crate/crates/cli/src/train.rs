use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use absa_lab::eval::{accuracy, macro_f1};
use absa_lab::lmdata::Shard;
use absa_lab::nn::{predict, AdamConfig, Checkpoint, EncoderConfig, EncoderModel, Precision};
use absa_lab::text::{Domain, DomainSet, Split};
use absa_lab::training::{lm_finetune, predict_dataset, train_atsc, AtscRunSpec, FinetuneRunSpec};
use absa_lab::{seed, Exec};

use crate::common::{dataset_from, domain_hint, f, load_checkpoint, load_vocab, parse_precision, start_run};
use crate::config::{existing, merge, required, usage};

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmFinetuneArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    /// Output directory of prepare-corpus (vocab.txt and shards/).
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Starting checkpoint; a fresh model is initialized when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Corpus domain (laptops, restaurants or joint).
    #[arg(long)]
    pub domain: Option<DomainSet>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Stop after this many sentences.
    #[arg(long)]
    pub max_sentences: Option<u64>,
    /// Cumulative sentence counts at which to save a snapshot.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<u64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub ff: Option<usize>,
    #[arg(long, value_parser = parse_precision)]
    pub precision: Option<Precision>,
    #[arg(long)]
    pub dropout: Option<f64>,
}

impl LmFinetuneArgs {
    fn resolve(mut self) -> Self {
        let d = *self.domain.get_or_insert(DomainSet::Restaurants);
        let full = FinetuneRunSpec::full_scale(d, 0);
        self.epochs.get_or_insert(full.epochs);
        self.batch_size.get_or_insert(full.batch_size);
        self.lr.get_or_insert(full.adam.lr);
        self.snapshots.get_or_insert_with(Vec::new);
        self.seed.get_or_insert(0);
        if self.model.is_none() {
            let t = EncoderConfig::default();
            self.layers.get_or_insert(t.num_layers);
            self.hidden.get_or_insert(t.hidden_dim);
            self.heads.get_or_insert(t.num_heads);
            self.ff.get_or_insert(t.ff_dim);
            self.precision.get_or_insert(t.precision);
            self.dropout.get_or_insert(t.dropout);
        }
        self
    }
}

pub fn run_lm(flags: LmFinetuneArgs, exec: Exec) -> Result<()> {
    let a = merge(&flags, flags.config.as_deref())?.resolve();
    let corpus = existing(&a.corpus, "corpus")?;
    let vocab = load_vocab(&corpus.join("vocab.txt"))?;
    let mut shard_files: Vec<PathBuf> = std::fs::read_dir(corpus.join("shards"))
        .with_context(|| format!("no shards/ directory in {}", corpus.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    shard_files.sort();
    if shard_files.is_empty() {
        return Err(usage(format!("no shards in {}", corpus.join("shards").display())));
    }
    let model_file = match &a.model {
        Some(_) => Some(existing(&a.model, "model")?),
        None => None,
    };
    let seed = a.seed.unwrap_or_default();
    let spec = FinetuneRunSpec {
        d_lm: a.domain.unwrap_or(DomainSet::Restaurants),
        epochs: a.epochs.unwrap_or(1),
        batch_size: a.batch_size.unwrap_or(32),
        adam: AdamConfig { lr: a.lr.unwrap_or(3e-5), ..AdamConfig::default() },
        max_sentences: a.max_sentences,
        snapshots: a.snapshots.clone().unwrap_or_default(),
        seed,
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let shards = shard_files
        .iter()
        .map(|p| Shard::load(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let start = match &model_file {
        Some(p) => load_checkpoint(p)?,
        None => {
            let cfg = EncoderConfig {
                num_layers: a.layers.unwrap_or(2),
                hidden_dim: a.hidden.unwrap_or(64),
                num_heads: a.heads.unwrap_or(2),
                ff_dim: a.ff.unwrap_or(128),
                vocab_size: vocab.len(),
                max_len: shards[0].header.max_len,
                precision: a.precision.unwrap_or_default(),
                dropout: a.dropout.unwrap_or(0.0),
                ..EncoderConfig::default()
            };
            let model = EncoderModel::new(cfg, seed::derive(seed, "init")).map_err(|e| usage(e.to_string()))?;
            let mut ck = Checkpoint::new(model);
            ck.vocab_hash = Some(vocab.hash());
            ck
        }
    };
    let rd = start_run(&a.out, flags.force, &a)?;
    vocab.save(&rd.join("vocab.txt"))?;
    rd.write_spec(&[
        ("d_lm", spec.d_lm.to_string()),
        ("epochs", spec.epochs.to_string()),
        ("batch_size", spec.batch_size.to_string()),
        ("lr", spec.adam.lr.to_string()),
        ("max_sentences", spec.max_sentences.map_or("none".into(), |x| x.to_string())),
        ("snapshots", spec.snapshots.iter().map(u64::to_string).collect::<Vec<_>>().join(",")),
        ("seed", seed.to_string()),
        ("shards", shard_files.len().to_string()),
    ])?;

    let out = lm_finetune(&start, &spec, &shards, exec)?;

    let rows: Vec<Vec<String>> = out
        .log
        .iter()
        .map(|r| {
            vec![
                seed.to_string(),
                r.step.to_string(),
                r.epoch.to_string(),
                r.sentences_seen.to_string(),
                f(r.loss),
                f(r.mlm_loss),
                f(r.nsp_loss),
                r.lr.to_string(),
            ]
        })
        .collect();
    rd.write_metrics(&["seed", "step", "epoch", "sentences_seen", "loss", "mlm_loss", "nsp_loss", "lr"], &rows)?;
    let mut snaps = String::from("scheduled\tsentences_seen\tfile\n");
    for s in &out.snapshots {
        let name = format!("snapshot-{}.ckpt", s.scheduled);
        s.checkpoint.save(&rd.checkpoint_path(&name))?;
        let _ = writeln!(snaps, "{}\t{}\t{name}", s.scheduled, s.sentences_seen);
    }
    std::fs::write(rd.join("snapshots.tsv"), snaps)?;
    let mut fin = out.final_checkpoint;
    fin.meta.insert("seed".into(), seed.to_string());
    fin.save(&rd.checkpoint_path("final.ckpt"))?;
    let sentences = fin.meta.get("sentences_seen").cloned().unwrap_or_default();
    rd.write_summary(&[
        ("command", "lm-finetune".into()),
        ("seed", seed.to_string()),
        ("steps", out.log.len().to_string()),
        ("sentences_seen", sentences.clone()),
        ("final_loss", out.log.last().map_or("none".into(), |r| f(r.loss))),
        ("unreached_snapshots", out.unreached.iter().map(u64::to_string).collect::<Vec<_>>().join(",")),
    ])?;
    println!("trained {} steps over {sentences} sentences -> {}", out.log.len(), rd.path().display());
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainAtscArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub force: bool,
    /// Starting checkpoint (base or LM-finetuned).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// SemEval training XML files; two files (one per domain) train jointly.
    #[arg(long, value_delimiter = ',')]
    pub train: Option<Vec<PathBuf>>,
    /// SemEval test XML files evaluated after training.
    #[arg(long, value_delimiter = ',')]
    pub test: Option<Vec<PathBuf>>,
    /// Training domain (laptops, restaurants or joint); guessed from file names when absent.
    #[arg(long)]
    pub domain: Option<DomainSet>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl TrainAtscArgs {
    fn resolve(mut self) -> Self {
        let full = AtscRunSpec::full_scale(DomainSet::Joint, 0);
        self.epochs.get_or_insert(full.epochs);
        self.batch_size.get_or_insert(full.batch_size);
        self.lr.get_or_insert(full.adam.lr);
        self.validation_fraction.get_or_insert(full.validation_fraction);
        self.seed.get_or_insert(0);
        self.test.get_or_insert_with(Vec::new);
        if self.domain.is_none() {
            let hints: Vec<Domain> = self.train.iter().flatten().filter_map(|p| domain_hint(p)).collect();
            self.domain = match hints[..] {
                [d] => Some(d.into()),
                [a, b] if a != b => Some(DomainSet::Joint),
                _ => None,
            };
        }
        self
    }
}

pub fn run_atsc(flags: TrainAtscArgs, exec: Exec) -> Result<()> {
    let a = merge(&flags, flags.config.as_deref())?.resolve();
    let model_file = existing(&a.model, "model")?;
    let vocab_file = existing(&a.vocab, "vocab")?;
    let train_files = required(&a.train, "train")?;
    let d_train = required(&a.domain, "domain")?;
    let start = load_checkpoint(&model_file)?;
    let vocab = load_vocab(&vocab_file)?;
    let train = dataset_from(&train_files, d_train.single(), Split::Train)?;
    let test_files = a.test.clone().unwrap_or_default();
    let tests = test_files
        .iter()
        .map(|p| dataset_from(std::slice::from_ref(p), d_train.single(), Split::Test).map(|d| (p.clone(), d)))
        .collect::<Result<Vec<_>>>()?;
    let seed = a.seed.unwrap_or_default();
    let spec = AtscRunSpec {
        d_train,
        epochs: a.epochs.unwrap_or(7),
        batch_size: a.batch_size.unwrap_or(32),
        adam: AdamConfig { lr: a.lr.unwrap_or(3e-5), ..AdamConfig::default() },
        seed,
        validation_fraction: a.validation_fraction.unwrap_or(0.1),
        max_len: a.max_len.unwrap_or(start.model.config.max_len),
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let rd = start_run(&a.out, flags.force, &a)?;
    rd.write_spec(&[
        ("d_train", d_train.to_string()),
        ("epochs", spec.epochs.to_string()),
        ("batch_size", spec.batch_size.to_string()),
        ("lr", spec.adam.lr.to_string()),
        ("validation_fraction", spec.validation_fraction.to_string()),
        ("max_len", spec.max_len.to_string()),
        ("seed", seed.to_string()),
        ("train_examples", train.len().to_string()),
    ])?;

    let out = train_atsc(&start.model, &spec, &train, &vocab, exec)?;

    let rows: Vec<Vec<String>> = out
        .steps
        .iter()
        .map(|r| vec![seed.to_string(), r.step.to_string(), r.epoch.to_string(), r.examples_seen.to_string(), f(r.loss), r.lr.to_string()])
        .collect();
    rd.write_metrics(&["seed", "step", "epoch", "sentences_seen", "loss", "lr"], &rows)?;
    let mut epochs = String::from("seed\tepoch\tmean_loss\ttrain_accuracy\tval_accuracy\n");
    for e in &out.epochs {
        let val = e.val_accuracy.map_or("NA".into(), f);
        let _ = writeln!(epochs, "{seed}\t{}\t{}\t{}\t{val}", e.epoch, f(e.mean_loss), f(e.train_accuracy));
    }
    std::fs::write(rd.join("epochs.tsv"), epochs)?;
    let mut ck = Checkpoint::new(out.model);
    ck.vocab_hash = Some(vocab.hash());
    ck.meta.insert("seed".into(), seed.to_string());
    ck.meta.insert("d_train".into(), d_train.to_string());
    ck.save(&rd.checkpoint_path("final.ckpt"))?;

    let mut summary = vec![("command", "train-atsc".to_string()), ("seed", seed.to_string())];
    if let Some(last) = out.epochs.last() {
        summary.push(("train_accuracy", f(last.train_accuracy)));
        summary.push(("val_accuracy", last.val_accuracy.map_or("NA".into(), f)));
    }
    let mut test_tsv = String::from("seed\tfile\taccuracy\tmacro_f1\n");
    for (p, ds) in &tests {
        let probs = predict_dataset(&ck.model, &ds.examples, &vocab, spec.max_len, exec)?;
        let preds: Vec<_> = probs.iter().map(predict).collect();
        let golds: Vec<_> = ds.examples.iter().map(|e| e.label).collect();
        let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
        let _ = writeln!(test_tsv, "{seed}\t{name}\t{}\t{}", f(accuracy(&preds, &golds)?), f(macro_f1(&preds, &golds)?));
    }
    if !tests.is_empty() {
        std::fs::write(rd.join("test.tsv"), &test_tsv)?;
        print!("{test_tsv}");
    }
    rd.write_summary(&summary)?;
    println!("trained {} steps -> {}", out.steps.len(), rd.path().display());
    Ok(())
}
