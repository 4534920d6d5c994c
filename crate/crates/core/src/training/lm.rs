use rand::seq::SliceRandom;

use super::TrainError;
use crate::exec::Exec;
use crate::lmdata::Shard;
use crate::nn::{adam_step, AdamConfig, AdamState, Checkpoint, LossGraph};
use crate::seed;
use crate::text::DomainSet;

/// LM finetuning run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FinetuneRunSpec {
    pub d_lm: DomainSet,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Stop once this many sentences have been presented.
    pub max_sentences: Option<u64>,
    /// Cumulative sentence counts at which to keep a snapshot.
    pub snapshots: Vec<u64>,
    pub seed: u64,
}

impl FinetuneRunSpec {
    pub fn new(d_lm: DomainSet, epochs: usize, seed: u64) -> Self {
        FinetuneRunSpec { d_lm, epochs, batch_size: 32, adam: AdamConfig::default(), max_sentences: None, snapshots: vec![], seed }
    }

    /// Full-scale budgets: about 30M sentence presentations per domain
    /// (1,007,209 x 30, 10,000,000 x 3, 2,007,213 x 15).
    pub fn full_scale(d_lm: DomainSet, seed: u64) -> Self {
        let epochs = match d_lm {
            DomainSet::Laptops => 30,
            DomainSet::Restaurants => 3,
            DomainSet::Joint => 15,
        };
        FinetuneRunSpec { adam: AdamConfig::full_scale(), ..Self::new(d_lm, epochs, seed) }
    }

    /// Corpus sizes in sentences for the full-scale runs.
    pub fn full_scale_corpus_sentences(d_lm: DomainSet) -> u64 {
        match d_lm {
            DomainSet::Laptops => 1_007_209,
            DomainSet::Restaurants => 10_000_000,
            DomainSet::Joint => 2_007_213,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::InvalidSpec("epochs and batch_size must be >= 1".into()));
        }
        if self.snapshots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TrainError::InvalidSpec("snapshot counts must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmStepRecord {
    pub step: u64,
    pub epoch: usize,
    pub sentences_seen: u64,
    pub loss: f64,
    pub mlm_loss: f64,
    pub nsp_loss: f64,
    pub lr: f64,
}

/// A checkpoint taken once `sentences_seen` first reached `scheduled`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub scheduled: u64,
    pub sentences_seen: u64,
    pub checkpoint: Checkpoint,
}

#[derive(Debug, Clone)]
pub struct FinetuneOutcome {
    pub snapshots: Vec<Snapshot>,
    pub final_checkpoint: Checkpoint,
    pub log: Vec<LmStepRecord>,
    /// Scheduled counts never reached before training ended.
    pub unreached: Vec<u64>,
}

fn snapshot_of(ck: &Checkpoint, scheduled: u64, seen: u64, step: u64) -> Snapshot {
    let mut checkpoint = ck.clone();
    if scheduled > 0 || seen > 0 {
        checkpoint.meta.insert("sentences_seen".into(), seen.to_string());
        checkpoint.meta.insert("step".into(), step.to_string());
    }
    Snapshot { scheduled, sentences_seen: seen, checkpoint }
}

/// Masked-LM + NSP training over `shards` (epoch `e` uses shard
/// `e % shards.len()`, so materialized re-maskings rotate). Batches come from
/// a per-epoch seeded shuffle; a short final batch is kept.
pub fn lm_finetune(
    start: &Checkpoint,
    spec: &FinetuneRunSpec,
    shards: &[Shard],
    exec: Exec,
) -> Result<FinetuneOutcome, TrainError> {
    spec.validate()?;
    if shards.is_empty() {
        return Err(TrainError::CorruptShard("no shards given".into()));
    }
    let vocab_size = start.model.config.vocab_size;
    for s in shards {
        if let Some(h) = &start.vocab_hash {
            if *h != s.header.vocab_hash {
                return Err(TrainError::VocabMismatch(format!("checkpoint vocab {h} vs shard vocab {}", s.header.vocab_hash)));
            }
        }
        if s.header.vocab_hash != shards[0].header.vocab_hash {
            return Err(TrainError::VocabMismatch("shards were built from different vocabularies".into()));
        }
        let too_big = s.examples.iter().flat_map(|e| e.input_ids.iter().chain(&e.mlm_labels)).any(|&id| id as usize >= vocab_size);
        if too_big {
            return Err(TrainError::VocabMismatch(format!("shard ids exceed model vocab_size {vocab_size}")));
        }
        if s.examples.iter().any(|e| e.real_len() > start.model.config.max_len) {
            return Err(TrainError::CorruptShard("sequence longer than model max_len".into()));
        }
    }

    let mut ck = start.clone();
    ck.vocab_hash = Some(shards[0].header.vocab_hash.clone());
    let mut adam = AdamState::new(&ck.model, spec.adam);
    let mut pending: std::collections::VecDeque<u64> = spec.snapshots.iter().copied().collect();
    let mut snapshots = Vec::new();
    while pending.front() == Some(&0) {
        pending.pop_front();
        snapshots.push(snapshot_of(start, 0, 0, 0));
    }

    let budget = spec.max_sentences.unwrap_or(u64::MAX);
    let mut seen = 0u64;
    let mut step = 0u64;
    let mut log = Vec::new();
    'epochs: for epoch in 0..spec.epochs {
        let shard = &shards[epoch % shards.len()];
        let mut order: Vec<usize> = (0..shard.examples.len()).collect();
        order.shuffle(&mut seed::rng_for(spec.seed, &format!("lm-epoch-{epoch}")));
        for idx in order.chunks(spec.batch_size) {
            if seen >= budget {
                break 'epochs;
            }
            let batch: Vec<_> = idx.iter().map(|&i| shard.examples[i].clone()).collect();
            let dropout = Some(seed::derive(spec.seed, &format!("lm-dropout-{step}")));
            let mut graph = match LossGraph::lm(&ck.model, &batch, exec, dropout) {
                Err(crate::nn::NnError::NoMaskedPositions) => continue,
                other => other?,
            };
            let grads = graph.backward(&ck.model)?;
            adam_step(&mut ck.model, &grads, &mut adam)?;
            step += 1;
            seen += batch.iter().map(|e| e.sentences as u64).sum::<u64>();
            let parts = graph.parts();
            log.push(LmStepRecord {
                step,
                epoch,
                sentences_seen: seen,
                loss: graph.value(),
                mlm_loss: parts.mlm,
                nsp_loss: parts.nsp,
                lr: spec.adam.lr,
            });
            while pending.front().is_some_and(|&c| c <= seen) {
                let c = pending.pop_front().unwrap();
                snapshots.push(snapshot_of(&ck, c, seen, step));
            }
        }
    }
    ck.optimizer = Some(adam);
    ck.meta.insert("sentences_seen".into(), seen.to_string());
    ck.meta.insert("step".into(), step.to_string());
    ck.meta.insert("d_lm".into(), spec.d_lm.to_string());
    Ok(FinetuneOutcome { snapshots, final_checkpoint: ck, log, unreached: pending.into_iter().collect() })
}
