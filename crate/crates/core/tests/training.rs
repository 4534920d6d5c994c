use absa_lab::lmdata::{MaskingPolicy, Shard};
use absa_lab::nn::{loss_lm, AdamConfig, Checkpoint, EncoderConfig, EncoderModel, Precision};
use absa_lab::text::{AtscDataset, AtscExample, ReviewDoc, Split, Vocab};
use absa_lab::training::{evaluate_accuracy, lm_finetune, train_atsc, AtscRunSpec, FinetuneRunSpec};
use absa_lab::{Domain, DomainSet, Exec, Polarity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vocab() -> Vocab {
    Vocab::from_words((0..60).map(|i| format!("w{i}")))
}

fn model(vocab: &Vocab, seed: u64) -> EncoderModel {
    let cfg = EncoderConfig { vocab_size: vocab.len(), max_len: 64, init_std: 0.1, ..Default::default() };
    EncoderModel::new(cfg, seed).unwrap()
}

/// 20 docs x 10 sentences of 4-8 tokens.
fn lm_corpus() -> Vec<ReviewDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    (0..20)
        .map(|d| ReviewDoc {
            doc_id: format!("d{d}"),
            sentences: (0..10)
                .map(|_| (0..rng.gen_range(4..=8)).map(|_| format!("w{}", rng.gen_range(0..60))).collect())
                .collect(),
            domain: Domain::Restaurants,
        })
        .collect()
}

fn atsc_toy() -> AtscDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let examples = (0..20)
        .map(|i| {
            let n = rng.gen_range(4..9);
            let tokens: Vec<String> = (0..n).map(|_| format!("w{}", rng.gen_range(0..60))).collect();
            AtscExample {
                target_start: rng.gen_range(0..n),
                target_len: 1,
                tokens,
                label: Polarity::ALL[i % 3],
                domain: Domain::Laptops,
            }
        })
        .collect();
    AtscDataset::new(Split::Train, examples)
}

fn atsc_spec(epochs: usize, seed: u64) -> AtscRunSpec {
    AtscRunSpec {
        d_train: DomainSet::Laptops,
        epochs,
        batch_size: 4,
        adam: AdamConfig { lr: 1e-3, ..Default::default() },
        seed,
        validation_fraction: 0.0,
        max_len: 64,
    }
}

#[test]
fn atsc_overfits_twenty_examples() {
    let v = vocab();
    let data = atsc_toy();
    let out = train_atsc(&model(&v, 1), &atsc_spec(60, 1), &data, &v, Exec::Parallel).unwrap();
    let acc = evaluate_accuracy(&out.model, &data.examples, &v, 64, Exec::Parallel).unwrap();
    assert_eq!(acc, 1.0, "epochs: {:?}", out.epochs.last());
}

#[test]
fn lm_halves_mlm_loss_within_fifty_epochs() {
    let v = vocab();
    let docs = lm_corpus();
    assert_eq!(docs.iter().map(ReviewDoc::num_sentences).sum::<usize>(), 200);
    let shard = Shard::build(&docs, &v, &MaskingPolicy::default(), 64, 3, Exec::Parallel).unwrap();
    let start = Checkpoint::new(model(&v, 2));
    let spec = FinetuneRunSpec { batch_size: 16, ..FinetuneRunSpec::new(DomainSet::Restaurants, 50, 4) };
    let out = lm_finetune(&start, &spec, std::slice::from_ref(&shard), Exec::Parallel).unwrap();
    let before = loss_lm(&start.model, &shard.examples, Exec::Parallel).unwrap().mlm;
    let after = loss_lm(&out.final_checkpoint.model, &shard.examples, Exec::Parallel).unwrap().mlm;
    assert!(after < 0.5 * before, "mlm loss {before} -> {after}");
}

#[test]
fn zero_snapshot_is_the_start_checkpoint() {
    let v = vocab();
    let shard = Shard::build(&lm_corpus(), &v, &MaskingPolicy::default(), 64, 3, Exec::Sequential).unwrap();
    let start = Checkpoint::new(model(&v, 5));
    let spec = FinetuneRunSpec { snapshots: vec![0, 50, 100_000], ..FinetuneRunSpec::new(DomainSet::Laptops, 1, 1) };
    let out = lm_finetune(&start, &spec, &[shard], Exec::Parallel).unwrap();
    assert_eq!(out.snapshots[0].checkpoint.to_bytes(), start.to_bytes());
    assert_eq!(out.snapshots.len(), 2);
    assert!(out.snapshots[1].sentences_seen >= 50);
    assert_eq!(out.unreached, [100_000]);
}

#[test]
fn checkpoint_round_trip_reproduces_forward() {
    let v = vocab();
    for precision in [Precision::Single, Precision::Double] {
        let cfg = EncoderConfig { vocab_size: v.len(), max_len: 32, precision, ..Default::default() };
        let m = EncoderModel::new(cfg, 8).unwrap();
        let ck = Checkpoint::new(m.clone());
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        let ids = [2, 10, 11, 12, 3, 13, 3];
        let segs = [0, 0, 0, 0, 0, 1, 1];
        let mask = [true; 7];
        let a = m.forward(&ids, &segs, &mask).unwrap();
        let b = back.model.forward(&ids, &segs, &mask).unwrap();
        for (x, y) in a.hidden.iter().zip(&b.hidden) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn training_is_deterministic_across_modes() {
    let v = vocab();
    let data = atsc_toy();
    let a = train_atsc(&model(&v, 3), &atsc_spec(3, 9), &data, &v, Exec::Parallel).unwrap();
    let b = train_atsc(&model(&v, 3), &atsc_spec(3, 9), &data, &v, Exec::Sequential).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.steps, b.steps);
    let c = train_atsc(&model(&v, 3), &atsc_spec(3, 10), &data, &v, Exec::Parallel).unwrap();
    assert_ne!(a.model, c.model);

    let shard = Shard::build(&lm_corpus(), &v, &MaskingPolicy::default(), 64, 3, Exec::Sequential).unwrap();
    let start = Checkpoint::new(model(&v, 5));
    let spec = FinetuneRunSpec::new(DomainSet::Joint, 2, 6);
    let x = lm_finetune(&start, &spec, std::slice::from_ref(&shard), Exec::Parallel).unwrap();
    let y = lm_finetune(&start, &spec, &[shard], Exec::Sequential).unwrap();
    assert_eq!(x.final_checkpoint.to_bytes(), y.final_checkpoint.to_bytes());
    assert_eq!(x.log, y.log);
}
