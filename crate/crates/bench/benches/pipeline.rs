use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use throwguard_bench::{build_kb, java, pages, replay_client};
use throwguard_core::chain::CodingTask;
use throwguard_core::java::{analyze, extract_invocations};
use throwguard_core::kb::parse_api_page;
use throwguard_core::{run_chain, ChainConfig};

fn knowledge_base(c: &mut Criterion) {
    let pages = pages();
    let vector = pages.iter().find(|(n, _)| n == "Vector.html").expect("Vector page").1.clone();
    c.bench_function("parse_api_page/Vector.html", |b| b.iter(|| parse_api_page(black_box(&vector))));
    c.bench_function("kb_build/all_pages", |b| b.iter(|| build_kb(black_box(&pages))));
}

fn analysis(c: &mut Criterion) {
    let kb = build_kb(&pages());
    let src = java("variant_d_good.java");
    c.bench_function("extract_invocations/variant_d", |b| b.iter(|| extract_invocations(black_box(&src))));
    c.bench_function("analyze/variant_d", |b| b.iter(|| analyze(black_box(&src), &kb)));
}

fn chain(c: &mut Criterion) {
    let kb = build_kb(&pages());
    let client = replay_client();
    let task = CodingTask::new("T2", "How to swap two elements in a vector using Java?");
    let config = ChainConfig::default();
    c.bench_function("run_chain/walkthrough_replay", |b| b.iter(|| run_chain(black_box(&task), &kb, &client, &config)));
}

criterion_group!(benches, knowledge_base, analysis, chain);
criterion_main!(benches);
