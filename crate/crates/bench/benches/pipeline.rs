use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use legalmeta::synthetic::{actor_dataset, phrase_count_fixture};
use legalmeta::{compile_pattern, evaluate, ActorModel, Concept, Engine, EvalOptions, ForestParams, MatchContext, Role, Scope};
use legalmeta_bench::replicated_corpus;
use std::hint::black_box;

fn annotate(c: &mut Criterion) {
    let corpus = replicated_corpus(40);
    let engine = Engine::builtin();
    let mut g = c.benchmark_group("annotate");
    for workers in [1, 4] {
        g.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter(|| engine.annotate_all(black_box(&corpus), w))
        });
    }
    g.finish();
}

fn query(c: &mut Criterion) {
    let corpus = replicated_corpus(40);
    let engine = Engine::builtin();
    let pattern = compile_pattern("PP < (P $ (NP=t < marker:actor))").unwrap();
    c.bench_function("query/passive-actor", |b| {
        b.iter(|| {
            corpus
                .iter()
                .map(|s| MatchContext::new(s, engine.lexicon()).find(&pattern, Scope::Full).len())
                .sum::<usize>()
        })
    });
}

fn train(c: &mut Criterion) {
    let data = actor_dataset(300, 5);
    let rows: Vec<Vec<String>> = data.iter().map(|(f, _)| f.to_row()).collect();
    let labels: Vec<Role> = data.iter().map(|(_, r)| *r).collect();
    let params = ForestParams {
        trees: 20,
        ..ForestParams::default()
    };
    c.bench_function("train/300x20", |b| b.iter(|| ActorModel::train(&rows, &labels, &params).unwrap()));
}

fn eval(c: &mut Criterion) {
    let (pred, gold) = phrase_count_fixture(&[(Concept::Condition, 1069, 31, 58)], &[]);
    let opts = EvalOptions::default();
    c.bench_function("eval/1158", |b| b.iter(|| evaluate(&pred, &gold, &opts).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = annotate, query, train, eval
}
criterion_main!(benches);
