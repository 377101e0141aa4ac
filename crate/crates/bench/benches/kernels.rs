use criterion::{black_box, criterion_group, criterion_main, Criterion};

use lll_bench::{c4_instance, grid, uniform};
use lll_core::gap::{lattice_gap_table, Q1Rule};
use lll_core::qlll::{verify_span, RankMode};
use lll_core::shearer::{ind_poly, shearer_check};

fn independence_polynomial(c: &mut Criterion) {
    let g = grid(4, 4);
    let r = uniform(16, 1, 10);
    c.bench_function("ind_poly grid 4x4", |b| b.iter(|| ind_poly(black_box(&g), black_box(&r), None).unwrap()));
    let g = grid(3, 4);
    let r = uniform(12, 1, 12);
    c.bench_function("shearer_check grid 3x4", |b| b.iter(|| shearer_check(black_box(&g), black_box(&r)).unwrap()));
}

fn span_verification(c: &mut Criterion) {
    let inst = c4_instance();
    c.bench_function("verify_span C4 exact", |b| b.iter(|| verify_span(black_box(&inst), RankMode::Exact).unwrap()));
    c.bench_function("verify_span C4 modular", |b| b.iter(|| verify_span(black_box(&inst), RankMode::Modular).unwrap()));
}

fn gap_table(c: &mut Criterion) {
    c.bench_function("lattice gap table", |b| b.iter(|| lattice_gap_table(black_box(Q1Rule::HalfPCubed))));
}

criterion_group!(benches, independence_polynomial, span_verification, gap_table);
criterion_main!(benches);
