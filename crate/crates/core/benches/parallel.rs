use absa_lab::lmdata::{generate_examples, MaskingPolicy};
use absa_lab::nn::{EncoderConfig, EncoderModel, LossGraph};
use absa_lab::text::{ReviewDoc, Vocab};
use absa_lab::{seed, Domain, Exec};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;

fn corpus(docs: usize) -> (Vec<ReviewDoc>, Vocab) {
    let vocab = Vocab::from_words((0..500).map(|i| format!("w{i}")));
    let mut rng = seed::rng(1);
    let docs = (0..docs)
        .map(|d| ReviewDoc {
            doc_id: format!("d{d}"),
            sentences: (0..rng.gen_range(2..8))
                .map(|_| (0..rng.gen_range(4..16)).map(|_| format!("w{}", rng.gen_range(0..500))).collect())
                .collect(),
            domain: Domain::Laptops,
        })
        .collect();
    (docs, vocab)
}

fn lm_step(c: &mut Criterion) {
    let (docs, vocab) = corpus(40);
    let batch = generate_examples(&docs, &vocab, &MaskingPolicy::default(), 64, 1, Exec::Sequential).unwrap();
    let batch = &batch[..32];
    let cfg = EncoderConfig { vocab_size: vocab.len(), max_len: 64, ..Default::default() };
    let model = EncoderModel::new(cfg, 1).unwrap();
    let mut g = c.benchmark_group("lm_forward_backward_batch32");
    for exec in [Exec::Sequential, Exec::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| LossGraph::lm(&model, batch, exec, None).unwrap().backward(&model).unwrap())
        });
    }
    g.finish();
}

fn masking(c: &mut Criterion) {
    let (docs, vocab) = corpus(2000);
    let mut g = c.benchmark_group("generate_examples_2000_docs");
    g.sample_size(20);
    for exec in [Exec::Sequential, Exec::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| generate_examples(&docs, &vocab, &MaskingPolicy::default(), 128, 1, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, lm_step, masking);
criterion_main!(benches);
