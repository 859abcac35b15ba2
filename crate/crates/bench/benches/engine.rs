use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use narrachart::binder::{fallback_bind, select_examples, PromptDb, RetrievalConfig};
use narrachart::corpus::POWER_ARTICLE;
use narrachart::overlay::Palette;
use narrachart::render::render_png;
use narrachart::trend::{detect_pattern, DetectorParams, PatternId};
use narrachart::wire::{parse_wire, to_wire};
use narrachart::Lexicon;
use narrachart_bench::{grown_table, hedge_table, power_run, HEDGE_TEXT};

fn binding(c: &mut Criterion) {
    let table = hedge_table();
    let lexicon = Lexicon::default();
    let result = fallback_bind(HEDGE_TEXT, &table, &lexicon).unwrap();
    let wire = to_wire(&result);
    c.bench_function("fallback_bind/hedge", |b| b.iter(|| fallback_bind(black_box(HEDGE_TEXT), &table, &lexicon)));
    c.bench_function("wire/parse", |b| b.iter(|| parse_wire(black_box(&wire))));
    let db = PromptDb::bundled();
    let cfg = RetrievalConfig::default();
    c.bench_function("retrieval/select_k10", |b| b.iter(|| select_examples(black_box(HEDGE_TEXT), &db, &cfg)));
}

fn detection(c: &mut Criterion) {
    let mut group = c.benchmark_group("detect/sharp_increase");
    for rows in [20, 100, 200] {
        let table = grown_table(rows, 2);
        let first = table.numeric_columns().next().unwrap().name.clone();
        let series = table.numeric_series(&first).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(rows), &series, |b, s| {
            b.iter(|| detect_pattern(s, PatternId::SharpIncrease, &DetectorParams::default()))
        });
    }
    group.finish();
}

fn rendering(c: &mut Criterion) {
    let run = power_run();
    let palette = Palette::default();
    let svg = run.charts[1].render_svg(&run.table, &palette).unwrap();
    c.bench_function("render/svg", |b| b.iter(|| run.charts[1].render_svg(&run.table, &palette)));
    c.bench_function("render/png", |b| b.iter(|| render_png(black_box(&svg), 1.0)));
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("power_article_offline", |b| b.iter(|| black_box(POWER_ARTICLE.len()) + power_run().charts.len()));
    group.finish();
}

criterion_group!(benches, binding, detection, rendering);
criterion_main!(benches);
