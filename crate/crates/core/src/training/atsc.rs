use rand::seq::SliceRandom;

use super::TrainError;
use crate::exec::Exec;
use crate::lmdata::{encode_pair, LmDataError};
use crate::nn::{adam_step, cls_probs, predict, AdamConfig, AdamState, EncoderInput, EncoderModel, LabeledPair, LossGraph, NnError, Precision};
use crate::seed;
use crate::text::{AtscDataset, AtscExample, DomainSet, Split, Vocab};

/// Supervised ATSC run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AtscRunSpec {
    pub d_train: DomainSet,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Seeded fraction of the training data held out for validation.
    pub validation_fraction: f64,
    pub max_len: usize,
}

impl AtscRunSpec {
    /// lr 3e-5, batch 32, 7 epochs, 10% validation holdout.
    pub fn full_scale(d_train: DomainSet, seed: u64) -> Self {
        AtscRunSpec {
            d_train,
            epochs: 7,
            batch_size: 32,
            adam: AdamConfig::full_scale(),
            seed,
            validation_fraction: 0.1,
            max_len: 128,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::InvalidSpec("epochs and batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(TrainError::InvalidSpec("validation_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtscStepRecord {
    pub step: u64,
    pub epoch: usize,
    /// Training examples consumed so far.
    pub examples_seen: u64,
    pub loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtscEpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AtscOutcome {
    pub model: EncoderModel,
    pub steps: Vec<AtscStepRecord>,
    pub epochs: Vec<AtscEpochRecord>,
}

/// `[CLS] sentence [SEP] target [SEP]` without padding.
pub fn encode_atsc_input(example: &AtscExample, vocab: &Vocab, max_len: usize) -> Result<(Vec<u32>, Vec<u8>), LmDataError> {
    if !example.is_valid() {
        return Err(LmDataError::DegenerateSequence("target span outside sentence".into()));
    }
    let sentence = vocab.encode(&example.tokens);
    let target = vocab.encode(example.target());
    let (mut ids, mut segs) = encode_pair(&sentence, &target, max_len)?;
    let real = ids.iter().rposition(|&t| t != Vocab::specials().pad).map_or(0, |i| i + 1);
    ids.truncate(real);
    segs.truncate(real);
    Ok((ids, segs))
}

fn labeled(examples: &[AtscExample], vocab: &Vocab, max_len: usize) -> Result<Vec<LabeledPair>, TrainError> {
    examples
        .iter()
        .map(|e| {
            let (input_ids, segment_ids) = encode_atsc_input(e, vocab, max_len)?;
            Ok(LabeledPair { input_ids, segment_ids, label: e.label })
        })
        .collect()
}

fn probs_of(model: &EncoderModel, pairs: &[LabeledPair], exec: Exec) -> Result<Vec<[f64; 3]>, NnError> {
    exec.map(pairs, |p| {
        let mask = vec![true; p.input_ids.len()];
        let input = EncoderInput { input_ids: &p.input_ids, segment_ids: &p.segment_ids, attention_mask: &mask };
        model.forward(input.input_ids, input.segment_ids, input.attention_mask).map(|o| cls_probs(&model.weights, o.h_cls()))
    })
    .into_iter()
    .collect()
}

fn accuracy_of(model: &EncoderModel, pairs: &[LabeledPair], exec: Exec) -> Result<f64, NnError> {
    let probs = probs_of(model, pairs, exec)?;
    let correct = probs.iter().zip(pairs).filter(|(p, e)| predict(p) == e.label).count();
    Ok(correct as f64 / pairs.len().max(1) as f64)
}

/// Class probabilities for every example.
pub fn predict_dataset(model: &EncoderModel, examples: &[AtscExample], vocab: &Vocab, max_len: usize, exec: Exec) -> Result<Vec<[f64; 3]>, TrainError> {
    Ok(probs_of(model, &labeled(examples, vocab, max_len)?, exec)?)
}

pub fn evaluate_accuracy(model: &EncoderModel, examples: &[AtscExample], vocab: &Vocab, max_len: usize, exec: Exec) -> Result<f64, TrainError> {
    Ok(accuracy_of(model, &labeled(examples, vocab, max_len)?, exec)?)
}

/// Fine-tune `start` on `dataset` for a fixed number of epochs and return the
/// last-epoch model. The classification head is redrawn from `spec.seed`.
/// Test-split data is rejected.
pub fn train_atsc(
    start: &EncoderModel,
    spec: &AtscRunSpec,
    dataset: &AtscDataset,
    vocab: &Vocab,
    exec: Exec,
) -> Result<AtscOutcome, TrainError> {
    spec.validate()?;
    if dataset.split != Split::Train {
        return Err(TrainError::WrongSplit(dataset.split));
    }
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let all = labeled(&dataset.examples, vocab, spec.max_len)?;
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.shuffle(&mut seed::rng_for(spec.seed, "atsc-holdout"));
    let n_val = (all.len() as f64 * spec.validation_fraction).round() as usize;
    let n_val = n_val.min(all.len() - 1);
    let mut val_idx = order[..n_val].to_vec();
    let mut train_idx = order[n_val..].to_vec();
    val_idx.sort_unstable();
    train_idx.sort_unstable();
    let val: Vec<LabeledPair> = val_idx.iter().map(|&i| all[i].clone()).collect();
    let train: Vec<LabeledPair> = train_idx.iter().map(|&i| all[i].clone()).collect();

    let mut model = EncoderModel { config: start.config.clone(), weights: start.weights.clone() };
    model.weights.reinit_classifier(&model.config, spec.seed);
    if model.config.precision == Precision::Single {
        model.weights.round_to_f32();
    }
    let mut adam = AdamState::new(&model, spec.adam);
    let mut steps = Vec::new();
    let mut epochs = Vec::new();
    let mut step = 0u64;
    let mut seen = 0u64;
    for epoch in 0..spec.epochs {
        let mut perm: Vec<usize> = (0..train.len()).collect();
        perm.shuffle(&mut seed::rng_for(spec.seed, &format!("atsc-epoch-{epoch}")));
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for idx in perm.chunks(spec.batch_size) {
            let batch: Vec<LabeledPair> = idx.iter().map(|&i| train[i].clone()).collect();
            let dropout = Some(seed::derive(spec.seed, &format!("atsc-dropout-{step}")));
            let mut graph = LossGraph::atsc(&model, &batch, exec, dropout)?;
            let grads = graph.backward(&model)?;
            adam_step(&mut model, &grads, &mut adam)?;
            step += 1;
            seen += batch.len() as u64;
            loss_sum += graph.value();
            batches += 1;
            steps.push(AtscStepRecord { step, epoch, examples_seen: seen, loss: graph.value(), lr: spec.adam.lr });
        }
        let val_accuracy = if val.is_empty() { None } else { Some(accuracy_of(&model, &val, exec)?) };
        epochs.push(AtscEpochRecord {
            epoch,
            mean_loss: loss_sum / batches as f64,
            train_accuracy: accuracy_of(&model, &train, exec)?,
            val_accuracy,
        });
    }
    Ok(AtscOutcome { model, steps, epochs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{Domain, Polarity};

    #[test]
    fn dumplings_encoding() {
        let v = Vocab::from_words(["i", "love", "their", "dumplings"]);
        let ex = AtscExample {
            tokens: ["i", "love", "their", "dumplings"].map(String::from).to_vec(),
            target_start: 3,
            target_len: 1,
            label: Polarity::Positive,
            domain: Domain::Restaurants,
        };
        let (ids, segs) = encode_atsc_input(&ex, &v, 64).unwrap();
        assert_eq!(v.decode(&ids), ["[CLS]", "i", "love", "their", "dumplings", "[SEP]", "dumplings", "[SEP]"]);
        assert_eq!(segs, [0, 0, 0, 0, 0, 0, 1, 1]);
    }

    #[test]
    fn whole_sentence_target_repeats_segment() {
        let v = Vocab::from_words(["great", "screen"]);
        let ex = AtscExample {
            tokens: vec!["great".into(), "screen".into()],
            target_start: 0,
            target_len: 2,
            label: Polarity::Positive,
            domain: Domain::Laptops,
        };
        let (ids, segs) = encode_atsc_input(&ex, &v, 64).unwrap();
        assert_eq!(&ids[1..3], &ids[4..6]);
        assert_eq!(segs.iter().filter(|&&s| s == 1).count(), 3);
    }

    #[test]
    fn rejects_test_split_and_empty_data() {
        let cfg = crate::nn::EncoderConfig { vocab_size: 10, max_len: 8, hidden_dim: 4, num_heads: 1, ff_dim: 4, num_layers: 1, ..Default::default() };
        let model = EncoderModel::new(cfg, 0).unwrap();
        let v = Vocab::from_words(["a"]);
        let spec = AtscRunSpec { max_len: 8, ..AtscRunSpec::full_scale(DomainSet::Laptops, 0) };
        let test = AtscDataset::new(Split::Test, vec![]);
        assert!(matches!(train_atsc(&model, &spec, &test, &v, Exec::Sequential), Err(TrainError::WrongSplit(Split::Test))));
        let empty = AtscDataset::new(Split::Train, vec![]);
        assert!(matches!(train_atsc(&model, &spec, &empty, &v, Exec::Sequential), Err(TrainError::EmptyDataset)));
    }
}
