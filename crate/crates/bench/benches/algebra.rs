use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hodge_bench::random_form;
use hodge_core::Signature;
use std::hint::black_box;

fn wedge_and_star(c: &mut Criterion) {
    let mut group = c.benchmark_group("exterior_algebra");
    for n in [3, 5] {
        let left = random_form(Signature::new(n, 1, 1), 1);
        let right = random_form(Signature::new(n, 2, 3), 2);
        group.bench_with_input(BenchmarkId::new("wedge", n), &n, |b, _| b.iter(|| black_box(&left).wedge(black_box(&right))));
        group.bench_with_input(BenchmarkId::new("hodge_star", n), &n, |b, _| b.iter(|| black_box(&right).hodge_star()));
        group.bench_with_input(BenchmarkId::new("interior", n), &n, |b, _| b.iter(|| black_box(&left).interior(black_box(&right))));
    }
    group.finish();
}

criterion_group!(benches, wedge_and_star);
criterion_main!(benches);
