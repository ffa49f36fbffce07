use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pavi_bench::fixture;
use pavi_core::baselines::{annotate_from_spans, build_tag_space};
use pavi_core::codec::{delinearize, linearize};
use pavi_core::metrics::{evaluate, gold_predictions, SubsetFlags};
use pavi_core::ordering::order_pairs;
use pavi_core::seq2seq::{batch_gradients, decode, encode_input, DecodeConfig, ModelConfig, SearchStrategy};
use pavi_core::Tokenizer;

fn bench_codec(c: &mut Criterion) {
    let f = fixture(400, 10);
    let mut group = c.benchmark_group("codec");
    for n in [1, 4, 12] {
        let pairs = f.pairs(n);
        let tokens = linearize(&pairs, &f.spec, &Tokenizer).unwrap();
        group.bench_with_input(BenchmarkId::new("linearize", n), &pairs, |b, p| {
            b.iter(|| linearize(black_box(p), &f.spec, &Tokenizer).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("delinearize", n), &tokens, |b, t| {
            b.iter(|| delinearize(black_box(t), &f.spec))
        });
    }
    group.finish();
}

fn bench_ordering(c: &mut Criterion) {
    let f = fixture(2000, 10);
    c.bench_function("order_pairs/train_corpus", |b| {
        b.iter(|| {
            for e in &f.data.train.examples {
                black_box(order_pairs(&e.pairs, &f.policy, &f.index, &e.id));
            }
        })
    });
}

fn bench_metrics(c: &mut Criterion) {
    let f = fixture(2000, 200);
    let preds = gold_predictions(&f.data.test);
    c.bench_function("evaluate/test_200_with_subsets", |b| {
        b.iter(|| evaluate(&f.data.test, black_box(&preds), Some(&f.data.train), &SubsetFlags::default()))
    });
}

fn bench_seq2seq(c: &mut Criterion) {
    let f = fixture(200, 10);
    let model = f.model(ModelConfig::default());
    let data = f.encoded_train(&model, 8);
    let batch: Vec<_> = data.iter().collect();
    let mut group = c.benchmark_group("seq2seq");
    group.sample_size(20);
    group.bench_function("batch_gradients/8", |b| b.iter(|| batch_gradients(&model, black_box(&batch), 1.0)));
    let input = encode_input(&f.data.test.examples[0], &model.vocab, 512);
    for (name, strategy, beam_size) in [("greedy", SearchStrategy::Greedy, 1), ("beam4", SearchStrategy::Beam, 4)] {
        let cfg = DecodeConfig {
            strategy,
            beam_size,
            max_len: 32,
            ..DecodeConfig::default()
        };
        group.bench_function(name, |b| b.iter(|| decode(&model, black_box(&input), &cfg)));
    }
    group.finish();
}

fn bench_baselines(c: &mut Criterion) {
    let f = fixture(400, 10);
    let space = build_tag_space(&f.data.train);
    c.bench_function("annotate_from_spans/train_400", |b| {
        b.iter(|| {
            for e in &f.data.train.examples {
                black_box(annotate_from_spans(e, &space, &f.index));
            }
        })
    });
}

criterion_group!(codec, bench_codec);
criterion_group!(ordering, bench_ordering);
criterion_group!(metrics, bench_metrics);
criterion_group!(seq2seq, bench_seq2seq);
criterion_group!(baselines, bench_baselines);
criterion_main!(codec, ordering, metrics, seq2seq, baselines);
