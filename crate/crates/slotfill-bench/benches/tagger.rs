//! Tagger throughput at the default desk-scale dimensions (64/16/128):
//! eval-mode forward, CRF loss with exact gradients, Viterbi decoding, and
//! the full supervised gradient step.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use slotfill_core::corpus::{build_vocab, generate_synthetic_corpus, LabelScheme};
use slotfill_core::tagger::{
    backward, crf_nll_backward, forward, forward_eval, predict, viterbi, ModelParams,
};
use slotfill_core::{Dataset, HyperConfig, Mode, Sentence, Vocabulary};

struct Fixture {
    hyper: HyperConfig,
    vocab: Vocabulary,
    scheme: LabelScheme,
    params: ModelParams,
    test: Dataset,
    /// The longest test sentence; worst case for the per-sentence kernels.
    sentence: Sentence,
}

fn fixture() -> Fixture {
    let (train, _, test) = generate_synthetic_corpus(7, 400, 50, 64).expect("corpus");
    let vocab = build_vocab(&[&train], 1).expect("vocab");
    let scheme = LabelScheme::from_datasets(&[&train]).expect("scheme");
    let hyper = HyperConfig::default();
    let params = ModelParams::init(&hyper, &vocab, &scheme);
    let sentence =
        test.sentences.iter().max_by_key(|s| s.len()).expect("non-empty test split").clone();
    Fixture { hyper, vocab, scheme, params, test, sentence }
}

fn bench_forward(c: &mut Criterion) {
    let f = fixture();
    let mut g = c.benchmark_group("forward");
    g.throughput(Throughput::Elements(f.sentence.len() as u64));
    g.bench_function("eval_sentence", |b| {
        b.iter(|| {
            forward_eval(&f.params, &f.hyper, &f.vocab, black_box(&f.sentence.tokens))
                .expect("forward")
        })
    });
    g.bench_function("train_sentence", |b| {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        b.iter(|| {
            forward(&f.params, &f.hyper, &f.vocab, black_box(&f.sentence.tokens), Mode::Train, Some(&mut rng))
                .expect("forward")
        })
    });
    g.finish();
}

fn bench_crf(c: &mut Criterion) {
    let f = fixture();
    let trace = forward_eval(&f.params, &f.hyper, &f.vocab, &f.sentence.tokens).expect("forward");
    let p = trace.p().to_owned();
    let tags = f.scheme.encode_tags(&f.sentence).expect("tags");
    let mut g = c.benchmark_group("crf");
    g.throughput(Throughput::Elements(f.sentence.len() as u64));
    g.bench_function("nll_backward", |b| {
        b.iter(|| crf_nll_backward(black_box(&p.view()), &tags, &f.params.trans.view()).expect("crf"))
    });
    g.bench_function("viterbi", |b| {
        b.iter(|| viterbi(black_box(&p.view()), &f.params.trans.view()).expect("viterbi"))
    });
    g.finish();
}

fn bench_supervised_step(c: &mut Criterion) {
    let f = fixture();
    let tags = f.scheme.encode_tags(&f.sentence).expect("tags");
    let mut g = c.benchmark_group("supervised_step");
    g.throughput(Throughput::Elements(f.sentence.len() as u64));
    // One full gradient: train-mode forward, CRF loss backward, network and
    // embedding backward into a fresh gradient accumulator.
    g.bench_function("forward_backward", |b| {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        b.iter(|| {
            let trace = forward(
                &f.params,
                &f.hyper,
                &f.vocab,
                &f.sentence.tokens,
                Mode::Train,
                Some(&mut rng),
            )
            .expect("forward");
            let (d_p, _d_trans) =
                crf_nll_backward(&trace.p(), &tags, &f.params.trans.view()).expect("crf");
            let mut grads = f.params.zeros_like();
            backward(&f.params, &trace, &d_p.view(), &mut grads)
        })
    });
    g.finish();
}

fn bench_predict_dataset(c: &mut Criterion) {
    let f = fixture();
    let tokens: u64 = f.test.sentences.iter().map(|s| s.len() as u64).sum();
    let mut g = c.benchmark_group("predict");
    g.throughput(Throughput::Elements(tokens));
    g.sample_size(20);
    g.bench_function("dataset_64", |b| {
        b.iter(|| {
            for s in &f.test.sentences {
                black_box(
                    predict(&f.params, &f.hyper, &f.vocab, &f.scheme, &s.tokens).expect("predict"),
                );
            }
        })
    });
    g.finish();
}

criterion_group!(benches, bench_forward, bench_crf, bench_supervised_step, bench_predict_dataset);
criterion_main!(benches);
