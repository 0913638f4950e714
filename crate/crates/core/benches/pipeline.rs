use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use strokefont::classify::{
    evaluate_with, synthesize_with, train, Algo, Perturbation, TrainParams,
};
use strokefont::compose::generate_all_with;
use strokefont::par::Execution;
use strokefont::pipeline::{
    build_bank, build_font, bundled_seeds, default_model, run_roundtrip_eval,
};
use strokefont::raster::BinaryRaster;
use strokefont::rules::default_ruleset;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn bench(c: &mut Criterion) {
    let seeds = bundled_seeds().unwrap();
    let model = default_model(42).unwrap();
    let rules = default_ruleset();
    let bank = build_bank(&seeds, &model, Execution::Sequential).unwrap();
    let glyphs: BTreeMap<u32, BinaryRaster> =
        generate_all_with(&bank, &rules, Execution::Sequential)
            .unwrap()
            .into_iter()
            .map(|g| (g.character, g.raster))
            .collect();
    let ds = synthesize_with(100, 42, &Perturbation::default(), Execution::Sequential).unwrap();
    let knn = train(&ds, Algo::Knn, &TrainParams::default()).unwrap();

    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("synthesize_100_per_class", name), |b| {
            b.iter(|| synthesize_with(black_box(100), 42, &Perturbation::default(), exec).unwrap())
        });
        g.bench_function(BenchmarkId::new("knn_evaluate_600", name), |b| {
            b.iter(|| evaluate_with(&knn, black_box(&ds), exec).unwrap())
        });
        g.bench_function(BenchmarkId::new("generate_23_glyphs", name), |b| {
            b.iter(|| generate_all_with(black_box(&bank), &rules, exec).unwrap())
        });
        g.bench_function(BenchmarkId::new("roundtrip_eval", name), |b| {
            b.iter(|| run_roundtrip_eval(black_box(&glyphs), &rules, &model, exec).unwrap())
        });
        g.bench_function(BenchmarkId::new("build_font", name), |b| {
            b.iter(|| build_font(black_box(&glyphs), "Bench", 1.0, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
